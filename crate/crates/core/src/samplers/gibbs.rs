//! Gibbs samplers for the hierarchical decomposition models.
//!
//! Both samplers alternate RTO draws of the two components with conjugate
//! hyperparameter updates. Kept states are stored under `g`, `h`, `f`
//! (`f = g + h` before recentering) and the hyperparameter names.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::grid::Signal;
use crate::linalg::CglsOptions;
use crate::operators::GradOperator;
use crate::priors::BesovPrior;
use crate::problem::DecompProblem;
use crate::rng::RngHandle;

use super::chain::{is_kept, kept_count, ChainMeta, ChainStore, SampleMatrix};
use super::hyper::{sample_hyper_lambda_besov, sample_hyper_lambda_diag, sample_hyper_lambda_h};
use super::rto::{rto_sample_besov_component, rto_sample_g, rto_sample_h, RtoDraw};

/// Hyperprior parameters for the Gaussian-Besov model: `IG(alpha1, beta1)` on
/// each gradient variance and `Gamma(alpha2, beta2)` on `lambda_h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBesovHyper {
    pub alpha1: f64,
    pub beta1: f64,
    pub alpha2: f64,
    pub beta2: f64,
}

/// Gamma hyperpriors `(a1, b1)` on `lambda_g` and `(a2, b2)` on `lambda_h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoBesovHyper {
    pub a1: f64,
    pub b1: f64,
    pub a2: f64,
    pub b2: f64,
}

/// Starting state. Any `None` falls back to zero components and unit
/// hyperparameters.
#[derive(Debug, Clone, Default)]
pub struct GibbsInit {
    pub g: Option<Signal>,
    pub h: Option<Signal>,
    pub lambda_diag: Option<Vec<f64>>,
    pub lambda_g: Option<f64>,
    pub lambda_h: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct GibbsConfig {
    pub n_samples: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub cgls: CglsOptions,
    /// When false the hyperparameters stay at their initial values.
    pub update_hyper: bool,
    /// Store `g - mean(g)` and `h + mean(g)` instead of the raw components.
    pub recenter: bool,
    /// Start each CGLS solve from the previous draw of the same component.
    pub warm_start: bool,
    /// Keep the full `lambda_diag` trace (it has `d * n` columns).
    pub store_lambda_diag: bool,
    pub init: GibbsInit,
}

impl GibbsConfig {
    pub fn new(n_samples: usize, burn_in: usize, thin: usize) -> Self {
        Self {
            n_samples,
            burn_in,
            thin,
            cgls: CglsOptions::default(),
            update_hyper: true,
            recenter: true,
            warm_start: true,
            store_lambda_diag: true,
            init: GibbsInit::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.n_samples {
            return Err(Error::InvalidParameter(format!(
                "burn-in {} must be smaller than the sample count {}",
                self.burn_in, self.n_samples
            )));
        }
        if self.thin == 0 {
            return Err(Error::InvalidParameter("thin must be >= 1".into()));
        }
        Ok(())
    }
}

/// `(g - mean(g), h + mean(g))`.
pub fn recenter_components(g: &Signal, h: &Signal) -> Result<(Signal, Signal)> {
    h.ensure_grid(g.grid())?;
    let m = g.mean();
    let gt = g.values().iter().map(|v| v - m).collect();
    let ht = h.values().iter().map(|v| v + m).collect();
    Ok((Signal::new(g.grid(), gt)?, Signal::new(g.grid(), ht)?))
}

struct Recorder {
    g: SampleMatrix,
    h: SampleMatrix,
    f: SampleMatrix,
    recenter: bool,
    meta: ChainMeta,
    f_buf: Vec<f64>,
}

impl Recorder {
    fn new(n: usize, rows: usize, config: &GibbsConfig, sampler: &str, rng: &RngHandle) -> Self {
        Self {
            g: SampleMatrix::with_capacity(n, rows),
            h: SampleMatrix::with_capacity(n, rows),
            f: SampleMatrix::with_capacity(n, rows),
            recenter: config.recenter,
            meta: ChainMeta {
                sampler: sampler.to_string(),
                n_samples: config.n_samples,
                burn_in: config.burn_in,
                thin: config.thin,
                seed: rng.seed(),
                stream_id: rng.stream_id(),
                ..ChainMeta::default()
            },
            f_buf: vec![0.0; n],
        }
    }

    fn note(&mut self, draw: &RtoDraw) {
        self.meta.cgls_solves += 1;
        self.meta.cgls_iterations += draw.iterations as u64;
        if !draw.converged {
            self.meta.cgls_nonconverged += 1;
            log::warn!(
                "CGLS stopped at relative residual {:.3e} after {} iterations",
                draw.relres,
                draw.iterations
            );
        }
    }

    fn push_components(&mut self, g: &Signal, h: &Signal) -> Result<()> {
        for ((f, a), b) in self.f_buf.iter_mut().zip(g.values()).zip(h.values()) {
            *f = a + b;
        }
        self.f.push(&self.f_buf);
        if self.recenter {
            let (gt, ht) = recenter_components(g, h)?;
            self.g.push(gt.values());
            self.h.push(ht.values());
        } else {
            self.g.push(g.values());
            self.h.push(h.values());
        }
        Ok(())
    }

    fn finish(mut self, started: Instant) -> ChainStore {
        self.meta.wall_time_secs = started.elapsed().as_secs_f64();
        let mut store = ChainStore {
            meta: self.meta,
            ..ChainStore::default()
        };
        store.insert("g", self.g);
        store.insert("h", self.h);
        store.insert("f", self.f);
        store
    }
}

fn ensure_finite_signal(s: &Signal, what: &'static str) -> Result<()> {
    if s.values().iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

fn ensure_finite(v: f64, what: &'static str) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::NonFinite(what))
    }
}

fn initial_signal(init: &Option<Signal>, problem: &DecompProblem) -> Result<Signal> {
    match init {
        Some(s) => {
            s.ensure_grid(problem.grid())?;
            Ok(s.clone())
        }
        None => Ok(Signal::zeros(problem.grid())),
    }
}

/// Gibbs sampler for the hierarchical Gaussian gradient prior on `g` and the
/// Gaussian Besov prior `exp(-lambda_h/2 ||S W h||^2)` on `h`. Each sweep
/// draws `g`, then `h`, then `Lambda`, then `lambda_h`.
pub fn gibbs_gaussian_besov(
    problem: &DecompProblem,
    prior_h: &BesovPrior,
    hyper: &GaussianBesovHyper,
    config: &GibbsConfig,
    rng: &mut RngHandle,
) -> Result<ChainStore> {
    config.validate()?;
    prior_h.params().validate()?;
    if prior_h.grid() != problem.grid() {
        return Err(Error::GridMismatch("h prior and problem".into()));
    }
    let grid = problem.grid();
    let n = grid.len();
    let n_grad = GradOperator::new(grid).output_len();

    let mut g = initial_signal(&config.init.g, problem)?;
    let mut h = initial_signal(&config.init.h, problem)?;
    let mut lambda_diag = match &config.init.lambda_diag {
        Some(v) if v.len() != n_grad => {
            return Err(Error::LengthMismatch {
                expected: n_grad,
                actual: v.len(),
            })
        }
        Some(v) => v.clone(),
        None => vec![1.0; n_grad],
    };
    let mut lambda_h = config.init.lambda_h.unwrap_or(1.0);

    let rows = kept_count(config.n_samples, config.burn_in, config.thin);
    let started = Instant::now();
    let mut rec = Recorder::new(n, rows, config, "hier_gaussian_besov", rng);
    let mut diag_trace = SampleMatrix::with_capacity(
        n_grad,
        if config.store_lambda_diag { rows } else { 0 },
    );
    let mut lh_trace = SampleMatrix::with_capacity(1, rows);

    for it in 0..config.n_samples {
        let warm = config.warm_start.then(|| g.clone());
        let draw = rto_sample_g(
            &h,
            &lambda_diag,
            problem,
            &config.cgls,
            Some(&mut *rng),
            warm.as_ref(),
        )?;
        rec.note(&draw);
        g = draw.signal;
        ensure_finite_signal(&g, "g draw")?;

        let warm = config.warm_start.then(|| h.clone());
        let draw = rto_sample_h(
            &g,
            lambda_h,
            prior_h,
            problem,
            &config.cgls,
            Some(&mut *rng),
            warm.as_ref(),
        )?;
        rec.note(&draw);
        h = draw.signal;
        ensure_finite_signal(&h, "h draw")?;

        if config.update_hyper {
            lambda_diag = sample_hyper_lambda_diag(&g, hyper.alpha1, hyper.beta1, rng)?;
            if lambda_diag.iter().any(|v| !v.is_finite() || *v <= 0.0) {
                return Err(Error::NonFinite("gradient variance draw"));
            }
            lambda_h = ensure_finite(
                sample_hyper_lambda_h(&h, hyper.alpha2, hyper.beta2, prior_h, rng)?,
                "lambda_h draw",
            )?;
        }

        if is_kept(it, config.burn_in, config.thin) {
            rec.push_components(&g, &h)?;
            if config.store_lambda_diag {
                diag_trace.push(&lambda_diag);
            }
            lh_trace.push(&[lambda_h]);
        }
    }

    let mut store = rec.finish(started);
    if config.store_lambda_diag {
        store.insert("lambda_diag", diag_trace);
    }
    store.insert("lambda_h", lh_trace);
    Ok(store)
}

/// Gibbs sampler for two Gaussian Besov priors `exp(-lambda ||S W x||^2)` with
/// Gamma hyperpriors on both strengths. Each sweep draws `g`, `h`, `lambda_g`,
/// `lambda_h`.
pub fn gibbs_two_besov(
    problem: &DecompProblem,
    prior_g: &BesovPrior,
    prior_h: &BesovPrior,
    hyper: &TwoBesovHyper,
    config: &GibbsConfig,
    rng: &mut RngHandle,
) -> Result<ChainStore> {
    config.validate()?;
    for prior in [prior_g, prior_h] {
        prior.params().validate()?;
        if prior.grid() != problem.grid() {
            return Err(Error::GridMismatch("Besov prior and problem".into()));
        }
        if prior.params().p != 2.0 {
            return Err(Error::InvalidParameter(format!(
                "two-Besov Gibbs needs p = 2, got p = {}",
                prior.params().p
            )));
        }
    }
    let n = problem.grid().len();
    let mut g = initial_signal(&config.init.g, problem)?;
    let mut h = initial_signal(&config.init.h, problem)?;
    let mut lambda_g = config.init.lambda_g.unwrap_or(1.0);
    let mut lambda_h = config.init.lambda_h.unwrap_or(1.0);

    let rows = kept_count(config.n_samples, config.burn_in, config.thin);
    let started = Instant::now();
    let mut rec = Recorder::new(n, rows, config, "hier_two_besov", rng);
    let mut lg_trace = SampleMatrix::with_capacity(1, rows);
    let mut lh_trace = SampleMatrix::with_capacity(1, rows);

    for it in 0..config.n_samples {
        let warm = config.warm_start.then(|| g.clone());
        let draw = rto_sample_besov_component(
            &h,
            2.0 * lambda_g,
            prior_g,
            problem,
            &config.cgls,
            Some(&mut *rng),
            warm.as_ref(),
        )?;
        rec.note(&draw);
        g = draw.signal;
        ensure_finite_signal(&g, "g draw")?;

        let warm = config.warm_start.then(|| h.clone());
        let draw = rto_sample_besov_component(
            &g,
            2.0 * lambda_h,
            prior_h,
            problem,
            &config.cgls,
            Some(&mut *rng),
            warm.as_ref(),
        )?;
        rec.note(&draw);
        h = draw.signal;
        ensure_finite_signal(&h, "h draw")?;

        if config.update_hyper {
            lambda_g = ensure_finite(
                sample_hyper_lambda_besov(&g, hyper.a1, hyper.b1, prior_g, rng)?,
                "lambda_g draw",
            )?;
            lambda_h = ensure_finite(
                sample_hyper_lambda_besov(&h, hyper.a2, hyper.b2, prior_h, rng)?,
                "lambda_h draw",
            )?;
        }

        if is_kept(it, config.burn_in, config.thin) {
            rec.push_components(&g, &h)?;
            lg_trace.push(&[lambda_g]);
            lh_trace.push(&[lambda_h]);
        }
    }

    let mut store = rec.finish(started);
    store.insert("lambda_g", lg_trace);
    store.insert("lambda_h", lh_trace);
    Ok(store)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn recenter_zero_mean_is_identity() {
        let grid = Grid::new(1, 2).unwrap();
        let g = Signal::new(grid, vec![1.0, -1.0, 2.0, -2.0]).unwrap();
        let h = Signal::new(grid, vec![0.5, 0.25, 0.0, 1.0]).unwrap();
        let (gt, ht) = recenter_components(&g, &h).unwrap();
        assert_eq!(gt, g);
        assert_eq!(ht, h);
    }

    #[test]
    fn recenter_ones() {
        let grid = Grid::new(1, 2).unwrap();
        let g = Signal::constant(grid, 1.0);
        let h = Signal::new(grid, vec![0.5, 0.25, 0.0, 1.0]).unwrap();
        let (gt, ht) = recenter_components(&g, &h).unwrap();
        assert_eq!(gt.values(), &[0.0; 4]);
        assert_eq!(ht.values(), &[1.5, 1.25, 1.0, 2.0]);
    }

    #[test]
    fn config_validation() {
        assert!(GibbsConfig::new(10, 10, 1).validate().is_err());
        assert!(GibbsConfig::new(10, 2, 0).validate().is_err());
        assert!(GibbsConfig::new(10, 2, 3).validate().is_ok());
    }
}
