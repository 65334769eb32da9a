//! Randomize-then-optimize draws from the Gaussian component conditionals.
//!
//! For a Gaussian conditional with density `exp(-1/2 ||M x - b||^2)`, the
//! minimizer of `||M x - (b + eta)||^2` with `eta ~ N(0, I)` is an exact draw.
//! Passing `rng = None` skips the perturbation and returns the conditional
//! mean.

use crate::error::{Error, Result};
use crate::grid::Signal;
use crate::linalg::{cgls_solve_from, Block, CglsOptions, LinearOperator, RowScale, StackedLsqProblem};
use crate::operators::GradOperator;
use crate::priors::BesovPrior;
use crate::problem::DecompProblem;
use crate::rng::RngHandle;

#[derive(Debug, Clone)]
pub struct RtoDraw {
    pub signal: Signal,
    pub iterations: usize,
    pub relres: f64,
    pub converged: bool,
}

/// `S W` as a linear operator.
pub(crate) struct ScaledWavelet<'a>(pub &'a BesovPrior);

impl LinearOperator for ScaledWavelet<'_> {
    fn rows(&self) -> usize {
        self.0.grid().len()
    }

    fn cols(&self) -> usize {
        self.0.grid().len()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        self.0.scaled_coeffs_into(x, out);
    }

    fn apply_adjoint(&self, y: &[f64], out: &mut [f64]) {
        let scaled: Vec<f64> = y.iter().zip(self.0.scaling()).map(|(v, s)| v * s).collect();
        self.0.dwt().inverse_into(&scaled, out);
    }
}

/// `[(y - A other) / sigma; 0]`, perturbed if an rng is supplied.
fn rhs_for(
    problem: &DecompProblem,
    other: &Signal,
    prior_rows: usize,
    rng: Option<&mut RngHandle>,
) -> Vec<f64> {
    let m = problem.data().len();
    let mut rhs = vec![0.0; m + prior_rows];
    problem.forward().apply_into(other.values(), &mut rhs[..m]);
    let inv_sigma = 1.0 / problem.noise_sigma();
    for (r, y) in rhs[..m].iter_mut().zip(problem.data()) {
        *r = (y - *r) * inv_sigma;
    }
    if let Some(rng) = rng {
        for r in rhs.iter_mut() {
            *r += rng.standard_normal();
        }
    }
    rhs
}

fn finish(problem: &DecompProblem, out: crate::linalg::CglsOutcome) -> Result<RtoDraw> {
    Ok(RtoDraw {
        signal: Signal::new(problem.grid(), out.x)?,
        iterations: out.iterations,
        relres: out.relres,
        converged: out.converged,
    })
}

/// Draw of `g | h, Lambda` from the system `[A/sigma; Lambda^{-1/2} D] g`.
pub fn rto_sample_g(
    h: &Signal,
    lambda_diag: &[f64],
    problem: &DecompProblem,
    opts: &CglsOptions,
    rng: Option<&mut RngHandle>,
    warm_start: Option<&Signal>,
) -> Result<RtoDraw> {
    h.ensure_grid(problem.grid())?;
    let grad = GradOperator::new(problem.grid());
    if lambda_diag.len() != grad.output_len() {
        return Err(Error::LengthMismatch {
            expected: grad.output_len(),
            actual: lambda_diag.len(),
        });
    }
    if lambda_diag.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "gradient variances must be positive and finite".into(),
        ));
    }
    let rhs = rhs_for(problem, h, grad.output_len(), rng);
    let inv_sd = lambda_diag.iter().map(|v| 1.0 / v.sqrt()).collect();
    let prob = StackedLsqProblem::new(
        vec![
            Block {
                op: problem.forward(),
                scale: RowScale::Scalar(1.0 / problem.noise_sigma()),
            },
            Block {
                op: &grad,
                scale: RowScale::Diagonal(inv_sd),
            },
        ],
        rhs,
    )?;
    let out = cgls_solve_from(&prob, warm_start.map(|s| s.values()), opts)?;
    finish(problem, out)
}

/// Draw of a Besov-distributed component given the other one, for a
/// Gaussian (`p = 2`) prior with precision `precision * (S W)^T (S W)`.
pub fn rto_sample_besov_component(
    other: &Signal,
    precision: f64,
    prior: &BesovPrior,
    problem: &DecompProblem,
    opts: &CglsOptions,
    rng: Option<&mut RngHandle>,
    warm_start: Option<&Signal>,
) -> Result<RtoDraw> {
    other.ensure_grid(problem.grid())?;
    if prior.params().p != 2.0 {
        return Err(Error::InvalidParameter(format!(
            "RTO needs a Gaussian Besov prior (p = 2), got p = {}",
            prior.params().p
        )));
    }
    if !(precision > 0.0) || !precision.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "prior precision must be positive, got {precision}"
        )));
    }
    let sw = ScaledWavelet(prior);
    let rhs = rhs_for(problem, other, problem.grid().len(), rng);
    let prob = StackedLsqProblem::new(
        vec![
            Block {
                op: problem.forward(),
                scale: RowScale::Scalar(1.0 / problem.noise_sigma()),
            },
            Block {
                op: &sw,
                scale: RowScale::Scalar(precision.sqrt()),
            },
        ],
        rhs,
    )?;
    let out = cgls_solve_from(&prob, warm_start.map(|s| s.values()), opts)?;
    finish(problem, out)
}

/// Draw of `h | g, lambda_h` for the prior `exp(-lambda_h/2 ||S W h||^2)`,
/// i.e. the system `[A/sigma; sqrt(lambda_h) S W] h`.
pub fn rto_sample_h(
    g: &Signal,
    lambda_h: f64,
    prior_h: &BesovPrior,
    problem: &DecompProblem,
    opts: &CglsOptions,
    rng: Option<&mut RngHandle>,
    warm_start: Option<&Signal>,
) -> Result<RtoDraw> {
    rto_sample_besov_component(g, lambda_h, prior_h, problem, opts, rng, warm_start)
}
