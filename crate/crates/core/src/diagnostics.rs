//! Posterior summaries and MCMC quality metrics.

use crate::error::{Error, Result};
use crate::grid::Signal;
use crate::samplers::SampleMatrix;

/// Minimum chain length accepted by [`effective_sample_size`] and
/// [`credible_interval`].
pub const MIN_SAMPLES: usize = 100;

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn is_constant(x: &[f64]) -> bool {
    x.iter().all(|v| *v == x[0])
}

fn centered(x: &[f64]) -> Vec<f64> {
    let m = mean(x);
    x.iter().map(|v| v - m).collect()
}

/// `(1/N) sum_t y_t y_{t+k}` for a centered chain.
fn autocov(y: &[f64], k: usize) -> f64 {
    let n = y.len();
    y[..n - k]
        .iter()
        .zip(&y[k..])
        .map(|(a, b)| a * b)
        .sum::<f64>()
        / n as f64
}

/// `rho(0..=max_lag)` with the biased covariance estimator.
pub fn autocorrelation(chain: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if max_lag < 1 || chain.len() <= max_lag {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= max_lag < chain length, got max_lag {max_lag} for length {}",
            chain.len()
        )));
    }
    if is_constant(chain) {
        return Err(Error::ConstantChain);
    }
    let y = centered(chain);
    let c0 = autocov(&y, 0);
    let mut rho = Vec::with_capacity(max_lag + 1);
    rho.push(1.0);
    for k in 1..=max_lag {
        rho.push(autocov(&y, k) / c0);
    }
    Ok(rho)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ess {
    pub value: f64,
    /// Set for constant chains, whose ESS is reported as the chain length.
    pub degenerate: bool,
}

/// `N / (1 + 2 sum_k rho(k))`, the sum cut by Geyer's initial positive
/// sequence: pairs `rho(2m) + rho(2m+1)` are accumulated while positive.
/// The result is clamped to `(0, N]`.
pub fn effective_sample_size(chain: &[f64]) -> Result<Ess> {
    let n = chain.len();
    if n < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_SAMPLES,
            actual: n,
        });
    }
    if is_constant(chain) {
        return Ok(Ess {
            value: n as f64,
            degenerate: true,
        });
    }
    let y = centered(chain);
    let c0 = autocov(&y, 0);
    // tau = -1 + 2 * sum_m Gamma_m with Gamma_0 = 1 + rho(1).
    let mut tau = -1.0;
    let mut m = 0;
    while 2 * m + 1 < n {
        let rho_a = if m == 0 { 1.0 } else { autocov(&y, 2 * m) / c0 };
        let rho_b = autocov(&y, 2 * m + 1) / c0;
        let pair = rho_a + rho_b;
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        m += 1;
    }
    let value = if tau > 0.0 {
        (n as f64 / tau).min(n as f64)
    } else {
        n as f64
    };
    Ok(Ess {
        value,
        degenerate: false,
    })
}

/// Linear interpolation between order statistics of a sorted slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq)]
pub struct CredibleInterval {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub width: Vec<f64>,
}

/// Per-column quantiles at `(1 - level)/2` and `(1 + level)/2`.
pub fn credible_interval(samples: &SampleMatrix, level: f64) -> Result<CredibleInterval> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "credible level must lie in (0, 1), got {level}"
        )));
    }
    if samples.rows() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_SAMPLES,
            actual: samples.rows(),
        });
    }
    let cols = samples.cols();
    let mut out = CredibleInterval {
        lower: Vec::with_capacity(cols),
        upper: Vec::with_capacity(cols),
        width: Vec::with_capacity(cols),
    };
    for j in 0..cols {
        let mut col = samples.column(j);
        col.sort_by(f64::total_cmp);
        let lo = quantile_sorted(&col, (1.0 - level) / 2.0);
        let hi = quantile_sorted(&col, (1.0 + level) / 2.0);
        out.lower.push(lo);
        out.upper.push(hi);
        out.width.push((hi - lo).max(0.0));
    }
    Ok(out)
}

/// `||estimate - truth|| / ||truth||`.
pub fn relative_error(estimate: &Signal, truth: &Signal) -> Result<f64> {
    estimate.ensure_grid(truth.grid())?;
    let denom = truth.norm();
    if denom == 0.0 {
        return Err(Error::ZeroSignal);
    }
    let num = estimate
        .values()
        .iter()
        .zip(truth.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(num / denom)
}

/// Running means `m_t = (1/t) sum_{i<=t} x_i`.
pub fn cumulative_mean(chain: &[f64]) -> Vec<f64> {
    let mut sum = 0.0;
    chain
        .iter()
        .enumerate()
        .map(|(i, x)| {
            sum += x;
            sum / (i + 1) as f64
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spread {
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

/// Min, median and max of a nonempty set of values. Even counts average the
/// two central values.
pub fn spread(values: &[f64]) -> Result<Spread> {
    if values.is_empty() {
        return Err(Error::TooFewSamples {
            needed: 1,
            actual: 0,
        });
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    let median = if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    };
    Ok(Spread {
        min: v[0],
        median,
        max: v[k - 1],
    })
}

/// Per-coordinate posterior summary of one sample matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainStats {
    pub level: f64,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub ci: CredibleInterval,
    pub ess: Vec<f64>,
    pub degenerate: Vec<bool>,
    /// `(coordinate, rho(0..=max_lag))` for each requested coordinate.
    pub acf: Vec<(usize, Vec<f64>)>,
}

impl ChainStats {
    pub fn compute(
        samples: &SampleMatrix,
        level: f64,
        acf_coords: &[usize],
        max_lag: usize,
    ) -> Result<Self> {
        let ci = credible_interval(samples, level)?;
        let rows = samples.rows() as f64;
        let mut mean_v = Vec::with_capacity(samples.cols());
        let mut std_v = Vec::with_capacity(samples.cols());
        let mut ess = Vec::with_capacity(samples.cols());
        let mut degenerate = Vec::with_capacity(samples.cols());
        for j in 0..samples.cols() {
            let col = samples.column(j);
            let m = mean(&col);
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (rows - 1.0);
            mean_v.push(m);
            std_v.push(var.sqrt());
            let e = effective_sample_size(&col)?;
            ess.push(e.value);
            degenerate.push(e.degenerate);
        }
        let mut acf = Vec::with_capacity(acf_coords.len());
        for &c in acf_coords {
            if c >= samples.cols() {
                return Err(Error::InvalidParameter(format!(
                    "ACF coordinate {c} out of range for {} columns",
                    samples.cols()
                )));
            }
            let col = samples.column(c);
            let lag = max_lag.min(col.len() - 1);
            let rho = if is_constant(&col) {
                let mut r = vec![0.0; lag + 1];
                r[0] = 1.0;
                r
            } else {
                autocorrelation(&col, lag)?
            };
            acf.push((c, rho));
        }
        Ok(Self {
            level,
            mean: mean_v,
            std: std_v,
            ci,
            ess,
            degenerate,
            acf,
        })
    }

    pub fn ess_spread(&self) -> Result<Spread> {
        spread(&self.ess)
    }
}
