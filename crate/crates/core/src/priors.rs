//! Besov priors on wavelet coefficients and the hierarchical Gaussian prior
//! on discrete gradients.
//!
//! A Besov prior with parameters `(s, p, lambda)` has unnormalized density
//! `exp(-lambda * ||S W f||_p^p)`, where `W` is an orthonormal periodic
//! wavelet transform and `S` is diagonal with value `2^{j (s + d/2 - d/p)}` on
//! the level-`j` detail block and 1 on the scaling coefficient. Normalizing
//! constants are omitted throughout.

use rand_distr::{Distribution, Gamma};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::grid::{Grid, Signal};
use crate::operators::GradOperator;
use crate::rng::RngHandle;
use crate::wavelet::{level_range, Dwt, WaveletBasis};

#[derive(Debug, Clone)]
pub struct BesovParams {
    pub s: f64,
    pub p: f64,
    pub lambda: f64,
    pub basis: WaveletBasis,
    pub grid: Grid,
}

impl BesovParams {
    pub fn new(s: f64, p: f64, lambda: f64, basis: WaveletBasis, grid: Grid) -> Result<Self> {
        let params = Self {
            s,
            p,
            lambda,
            basis,
            grid,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s > 0.0) || !self.s.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "Besov smoothness s must be positive, got {}",
                self.s
            )));
        }
        if !(self.p >= 1.0) || !self.p.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "Besov integrability p must be >= 1, got {}",
                self.p
            )));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "Besov strength lambda must be positive, got {}",
                self.lambda
            )));
        }
        Ok(())
    }

    /// `s + d/2 - d/p`.
    pub fn scale_exponent(&self) -> f64 {
        let d = self.grid.dim() as f64;
        self.s + d / 2.0 - d / self.p
    }
}

/// Diagonal of the Besov scaling matrix, in coefficient order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingDiagonal {
    values: Vec<f64>,
}

impl ScalingDiagonal {
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Level weights for an arbitrary exponent. Split out so callers that do not
/// care about `s > 0` validity (tests, zero-exponent checks) can use it.
pub fn scaling_values(grid: Grid, exponent: f64) -> Vec<f64> {
    let mut values = vec![1.0; grid.len()];
    for level in 0..grid.levels() {
        let w = (level as f64 * exponent).exp2();
        values[level_range(grid, level)].fill(w);
    }
    values
}

pub fn scaling_diagonal(params: &BesovParams) -> ScalingDiagonal {
    ScalingDiagonal {
        values: scaling_values(params.grid, params.scale_exponent()),
    }
}

/// A Besov prior with its transform and scaling diagonal precomputed.
#[derive(Debug, Clone)]
pub struct BesovPrior {
    params: BesovParams,
    dwt: Dwt,
    scaling: Vec<f64>,
}

impl BesovPrior {
    pub fn new(params: BesovParams) -> Result<Self> {
        params.validate()?;
        let dwt = Dwt::new(params.basis.clone(), params.grid);
        let scaling = scaling_diagonal(&params).values;
        Ok(Self {
            params,
            dwt,
            scaling,
        })
    }

    pub fn params(&self) -> &BesovParams {
        &self.params
    }

    pub fn grid(&self) -> Grid {
        self.params.grid
    }

    pub fn dwt(&self) -> &Dwt {
        &self.dwt
    }

    pub fn scaling(&self) -> &[f64] {
        &self.scaling
    }

    pub fn lambda(&self) -> f64 {
        self.params.lambda
    }

    /// Same prior with a different strength.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        let mut out = self.clone();
        out.params.lambda = lambda;
        out.params.validate()?;
        Ok(out)
    }

    /// `S W f` into `out`.
    pub fn scaled_coeffs_into(&self, f: &[f64], out: &mut [f64]) {
        self.dwt.forward_into(f, out);
        out.iter_mut().zip(&self.scaling).for_each(|(c, s)| *c *= s);
    }

    /// `||S W f||_2^2`.
    pub fn scaled_norm_sq(&self, f: &[f64]) -> f64 {
        let mut u = vec![0.0; f.len()];
        self.scaled_coeffs_into(f, &mut u);
        u.iter().map(|v| v * v).sum()
    }

    /// `lambda * ||S W f||_p^p`.
    pub fn neglog_density(&self, f: &Signal) -> Result<f64> {
        f.ensure_grid(self.grid())?;
        Ok(self.neglog_density_slice(f.values()))
    }

    pub fn neglog_density_slice(&self, f: &[f64]) -> f64 {
        let mut u = vec![0.0; f.len()];
        self.scaled_coeffs_into(f, &mut u);
        self.params.lambda * p_norm_pow(&u, self.params.p)
    }

    pub fn neglog_grad(&self, f: &Signal) -> Result<Vec<f64>> {
        f.ensure_grid(self.grid())?;
        let mut grad = vec![0.0; f.values().len()];
        self.neglog_and_grad_into(f.values(), &mut grad);
        Ok(grad)
    }

    /// Writes `lambda p W^T S (|S W f|^{p-1} sign(S W f))` into `grad` and
    /// returns the density value. `sign(0) = 0`.
    pub fn neglog_and_grad_into(&self, f: &[f64], grad: &mut [f64]) -> f64 {
        let n = f.len();
        let mut u = vec![0.0; n];
        self.scaled_coeffs_into(f, &mut u);
        let p = self.params.p;
        let lambda = self.params.lambda;
        let value = lambda * p_norm_pow(&u, p);
        let factor = lambda * p;
        for (ui, si) in u.iter_mut().zip(&self.scaling) {
            let dpsi = if p == 1.0 {
                signum0(*ui)
            } else if p == 2.0 {
                *ui
            } else {
                signum0(*ui) * ui.abs().powf(p - 1.0)
            };
            *ui = factor * si * dpsi;
        }
        self.dwt.inverse_into(&u, grad);
        value
    }

    /// Draws `f = W^T S^{-1} xi * lambda^{-1/p}` with i.i.d. generalized
    /// Gaussian `xi`.
    pub fn sample(&self, rng: &mut RngHandle) -> Signal {
        let p = self.params.p;
        let coef_scale = self.params.lambda.powf(-1.0 / p);
        let gg = GeneralizedGaussian::new(p);
        let c: Vec<f64> = self
            .scaling
            .iter()
            .map(|s| gg.sample(rng) * coef_scale / s)
            .collect();
        let mut f = vec![0.0; c.len()];
        self.dwt.inverse_into(&c, &mut f);
        Signal::new(self.grid(), f).expect("finite prior draw")
    }
}

fn signum0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn p_norm_pow(u: &[f64], p: f64) -> f64 {
    if p == 1.0 {
        u.iter().map(|v| v.abs()).sum()
    } else if p == 2.0 {
        u.iter().map(|v| v * v).sum()
    } else {
        u.iter().map(|v| v.abs().powf(p)).sum()
    }
}

/// Density proportional to `exp(-|x|^p)`, sampled through
/// `|X|^p ~ Gamma(1/p, 1)` with a random sign.
#[derive(Debug, Clone, Copy)]
pub struct GeneralizedGaussian {
    p: f64,
    gamma: Gamma<f64>,
}

impl GeneralizedGaussian {
    pub fn new(p: f64) -> Self {
        assert!(p >= 1.0, "generalized Gaussian needs p >= 1");
        Self {
            p,
            gamma: Gamma::new(1.0 / p, 1.0).expect("valid gamma shape"),
        }
    }

    /// `Gamma(3/p) / Gamma(1/p)`.
    pub fn variance(&self) -> f64 {
        (ln_gamma(3.0 / self.p) - ln_gamma(1.0 / self.p)).exp()
    }
}

impl Distribution<f64> for GeneralizedGaussian {
    fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let magnitude = self.gamma.sample(rng).powf(1.0 / self.p);
        if rng.random::<bool>() {
            magnitude
        } else {
            -magnitude
        }
    }
}

pub fn sample_generalized_gaussian(p: f64, rng: &mut RngHandle) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
    }
    Ok(GeneralizedGaussian::new(p).sample(rng))
}

/// Hierarchical Gaussian gradient prior state: `D g ~ N(0, diag(lambda_diag))`
/// with inverse-gamma hyperprior `IG(alpha1, beta1)` on each variance.
#[derive(Debug, Clone, PartialEq)]
pub struct HierGaussState {
    pub lambda_diag: Vec<f64>,
    pub alpha1: f64,
    pub beta1: f64,
}

impl HierGaussState {
    pub fn new(lambda_diag: Vec<f64>, alpha1: f64, beta1: f64) -> Result<Self> {
        if lambda_diag.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "gradient variances must be positive and finite".into(),
            ));
        }
        if !(alpha1 > 0.0) || !(beta1 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "inverse-gamma hyperparameters must be positive, got ({alpha1}, {beta1})"
            )));
        }
        Ok(Self {
            lambda_diag,
            alpha1,
            beta1,
        })
    }
}

/// `1/2 * sum_i (D g)_i^2 / Lambda_ii`.
pub fn hier_gauss_neglog(g: &Signal, state: &HierGaussState) -> Result<f64> {
    let op = GradOperator::new(g.grid());
    if state.lambda_diag.len() != op.output_len() {
        return Err(Error::LengthMismatch {
            expected: op.output_len(),
            actual: state.lambda_diag.len(),
        });
    }
    let dg = op.apply(g)?;
    Ok(0.5
        * dg
            .iter()
            .zip(&state.lambda_diag)
            .map(|(d, l)| d * d / l)
            .sum::<f64>())
}
