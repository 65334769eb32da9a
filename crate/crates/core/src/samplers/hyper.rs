//! Conjugate hyperparameter updates. Gamma laws use shape/rate; the inverse
//! gamma `IG(alpha, beta)` has density proportional to
//! `x^{-alpha-1} exp(-beta / x)`.

use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::grid::Signal;
use crate::operators::GradOperator;
use crate::priors::BesovPrior;
use crate::rng::RngHandle;

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "{name} must be positive, got {v}"
        )));
    }
    Ok(())
}

fn gamma_shape_rate(shape: f64, rate: f64, rng: &mut RngHandle) -> Result<f64> {
    let dist = Gamma::new(shape, 1.0 / rate)
        .map_err(|e| Error::InvalidParameter(format!("gamma({shape}, {rate}): {e}")))?;
    Ok(dist.sample(rng))
}

/// `Lambda_ii ~ IG(alpha1 + 1/2, beta1 + (D g)_i^2)`, independently.
pub fn sample_hyper_lambda_diag(
    g: &Signal,
    alpha1: f64,
    beta1: f64,
    rng: &mut RngHandle,
) -> Result<Vec<f64>> {
    check_positive("alpha1", alpha1)?;
    check_positive("beta1", beta1)?;
    let dg = GradOperator::new(g.grid()).apply(g)?;
    let unit = Gamma::new(alpha1 + 0.5, 1.0)
        .map_err(|e| Error::InvalidParameter(format!("inverse gamma shape: {e}")))?;
    Ok(dg
        .iter()
        .map(|d| (beta1 + d * d) / unit.sample(rng))
        .collect())
}

/// `lambda_h ~ Gamma(n/2 + alpha2, beta2 + 1/2 ||S_h W_h h||^2)`.
pub fn sample_hyper_lambda_h(
    h: &Signal,
    alpha2: f64,
    beta2: f64,
    prior_h: &BesovPrior,
    rng: &mut RngHandle,
) -> Result<f64> {
    check_positive("alpha2", alpha2)?;
    check_positive("beta2", beta2)?;
    h.ensure_grid(prior_h.grid())?;
    let n = h.values().len() as f64;
    let quad = prior_h.scaled_norm_sq(h.values());
    gamma_shape_rate(n / 2.0 + alpha2, beta2 + 0.5 * quad, rng)
}

/// Strength update for a `p = 2` Besov prior `exp(-lambda ||S W x||^2)`:
/// `lambda ~ Gamma(a + n/2, b + ||S W x||^2)`.
pub fn sample_hyper_lambda_besov(
    x: &Signal,
    a: f64,
    b: f64,
    prior: &BesovPrior,
    rng: &mut RngHandle,
) -> Result<f64> {
    check_positive("a", a)?;
    check_positive("b", b)?;
    x.ensure_grid(prior.grid())?;
    let n = x.values().len() as f64;
    let quad = prior.scaled_norm_sq(x.values());
    gamma_shape_rate(a + n / 2.0, b + quad, rng)
}
