use std::cell::RefCell;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::priors::BesovPrior;
use crate::problem::DecompProblem;

/// A differentiable negative log-density on `R^dim`.
pub trait GradientTarget {
    fn dim(&self) -> usize;

    /// Returns `-log pi(x)` (up to a constant) and writes its gradient.
    fn neglog_and_grad(&self, x: &[f64], grad: &mut [f64]) -> f64;
}

/// `||A f - y||^2 / (2 sigma^2)`, adding `A^T (A f - y) / sigma^2` to `grad`.
fn likelihood_and_grad(problem: &DecompProblem, f: &[f64], grad: &mut [f64]) -> f64 {
    let n = f.len();
    let mut r = vec![0.0; n];
    problem.forward().apply_into(f, &mut r);
    r.iter_mut().zip(problem.data()).for_each(|(ri, yi)| *ri -= yi);
    let inv_var = 1.0 / (problem.noise_sigma() * problem.noise_sigma());
    let value = 0.5 * inv_var * r.iter().map(|v| v * v).sum::<f64>();
    let mut atr = vec![0.0; n];
    problem.forward().adjoint_into(&r, &mut atr);
    grad.iter_mut()
        .zip(&atr)
        .for_each(|(gi, ai)| *gi += inv_var * ai);
    value
}

/// The same likelihood for a 1D circulant blur, through one FFT pair. With
/// `F = fft(f)` and kernel spectrum `K`, the inverse transform of
/// `K F + i |K|^2 F` has `A f` as its real part and `A^T A f` as its
/// imaginary part, both signals being real.
#[derive(Clone)]
struct FftLikelihood {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// `K / n` and `|K|^2 / n`; the `1/n` folds in the inverse normalization.
    spectrum: Vec<Complex<f64>>,
    power: Vec<f64>,
    data: Vec<f64>,
    at_data: Vec<f64>,
    inv_var: f64,
    work: RefCell<(Vec<Complex<f64>>, Vec<Complex<f64>>)>,
}

impl std::fmt::Debug for FftLikelihood {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftLikelihood")
            .field("n", &self.data.len())
            .finish_non_exhaustive()
    }
}

impl FftLikelihood {
    fn new(problem: &DecompProblem) -> Option<Self> {
        if problem.grid().dim() != 1 {
            return None;
        }
        let n = problem.grid().len();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let mut spectrum: Vec<Complex<f64>> = problem
            .forward()
            .kernel()
            .into_iter()
            .map(|k| Complex::new(k, 0.0))
            .collect();
        fwd.process(&mut spectrum);
        let scale = 1.0 / n as f64;
        let power = spectrum.iter().map(|k| k.norm_sqr() * scale).collect();
        spectrum.iter_mut().for_each(|k| *k *= scale);
        let mut at_data = vec![0.0; n];
        problem.forward().adjoint_into(problem.data(), &mut at_data);
        let scratch = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        Some(Self {
            fwd,
            inv,
            spectrum,
            power,
            data: problem.data().to_vec(),
            at_data,
            inv_var: 1.0 / (problem.noise_sigma() * problem.noise_sigma()),
            work: RefCell::new((
                vec![Complex::new(0.0, 0.0); n],
                vec![Complex::new(0.0, 0.0); scratch],
            )),
        })
    }

    fn eval(&self, f: &[f64], grad: &mut [f64]) -> f64 {
        let mut work = self.work.borrow_mut();
        let (buf, scratch) = &mut *work;
        for (b, v) in buf.iter_mut().zip(f) {
            *b = Complex::new(*v, 0.0);
        }
        self.fwd.process_with_scratch(buf, scratch);
        for ((b, k), p) in buf.iter_mut().zip(&self.spectrum).zip(&self.power) {
            let v = *b;
            *b = k * v + Complex::new(-p * v.im, p * v.re);
        }
        self.inv.process_with_scratch(buf, scratch);
        let mut sq = 0.0;
        for (((b, y), aty), g) in buf.iter().zip(&self.data).zip(&self.at_data).zip(grad) {
            let r = b.re - y;
            sq += r * r;
            *g += self.inv_var * (b.im - aty);
        }
        0.5 * self.inv_var * sq
    }
}

#[derive(Debug, Clone)]
enum Likelihood {
    Direct,
    Fft(FftLikelihood),
}

impl Likelihood {
    fn new(problem: &DecompProblem) -> Self {
        FftLikelihood::new(problem).map_or(Likelihood::Direct, Likelihood::Fft)
    }

    fn eval(&self, problem: &DecompProblem, f: &[f64], grad: &mut [f64]) -> f64 {
        match self {
            Likelihood::Direct => likelihood_and_grad(problem, f, grad),
            Likelihood::Fft(l) => l.eval(f, grad),
        }
    }
}

/// Posterior over the stacked state `[g; h]` with independent Besov priors:
/// `||A(g+h) - y||^2/(2 sigma^2) + lambda_g ||S_g W_g g||_{p_g}^{p_g}
///  + lambda_h ||S_h W_h h||_{p_h}^{p_h}`.
#[derive(Debug, Clone)]
pub struct TwoBesovPosterior {
    problem: DecompProblem,
    prior_g: BesovPrior,
    prior_h: BesovPrior,
    likelihood: Likelihood,
}

impl TwoBesovPosterior {
    pub fn new(problem: DecompProblem, prior_g: BesovPrior, prior_h: BesovPrior) -> Result<Self> {
        for prior in [&prior_g, &prior_h] {
            if prior.grid() != problem.grid() {
                return Err(Error::GridMismatch(
                    "prior and problem grids differ".to_string(),
                ));
            }
        }
        Ok(Self {
            likelihood: Likelihood::new(&problem),
            problem,
            prior_g,
            prior_h,
        })
    }

    pub fn problem(&self) -> &DecompProblem {
        &self.problem
    }

    pub fn prior_g(&self) -> &BesovPrior {
        &self.prior_g
    }

    pub fn prior_h(&self) -> &BesovPrior {
        &self.prior_h
    }

    pub fn neglog(&self, g: &[f64], h: &[f64]) -> f64 {
        let n = g.len();
        let mut x = Vec::with_capacity(2 * n);
        x.extend_from_slice(g);
        x.extend_from_slice(h);
        let mut grad = vec![0.0; 2 * n];
        self.neglog_and_grad(&x, &mut grad)
    }
}

impl GradientTarget for TwoBesovPosterior {
    fn dim(&self) -> usize {
        2 * self.problem.grid().len()
    }

    fn neglog_and_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let n = self.problem.grid().len();
        let (g, h) = x.split_at(n);
        let (grad_g, grad_h) = grad.split_at_mut(n);
        let vg = self.prior_g.neglog_and_grad_into(g, grad_g);
        let vh = self.prior_h.neglog_and_grad_into(h, grad_h);
        let f: Vec<f64> = g.iter().zip(h).map(|(a, b)| a + b).collect();
        let mut like_grad = vec![0.0; n];
        let vl = self.likelihood.eval(&self.problem, &f, &mut like_grad);
        for i in 0..n {
            grad_g[i] += like_grad[i];
            grad_h[i] += like_grad[i];
        }
        vl + vg + vh
    }
}

/// Single-component posterior `||A f - y||^2/(2 sigma^2) + lambda ||S W f||_p^p`.
#[derive(Debug, Clone)]
pub struct SingleBesovPosterior {
    problem: DecompProblem,
    prior: BesovPrior,
    likelihood: Likelihood,
}

impl SingleBesovPosterior {
    pub fn new(problem: DecompProblem, prior: BesovPrior) -> Result<Self> {
        if prior.grid() != problem.grid() {
            return Err(Error::GridMismatch(
                "prior and problem grids differ".to_string(),
            ));
        }
        Ok(Self {
            likelihood: Likelihood::new(&problem),
            problem,
            prior,
        })
    }

    pub fn problem(&self) -> &DecompProblem {
        &self.problem
    }
}

impl GradientTarget for SingleBesovPosterior {
    fn dim(&self) -> usize {
        self.problem.grid().len()
    }

    fn neglog_and_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let vp = self.prior.neglog_and_grad_into(x, grad);
        vp + self.likelihood.eval(&self.problem, x, grad)
    }
}

/// Zero-mean Gaussian `N(mean, P^{-1})` given by a dense precision matrix.
#[derive(Debug, Clone)]
pub struct GaussianTarget {
    mean: Vec<f64>,
    precision: Vec<f64>,
}

impl GaussianTarget {
    pub fn new(mean: Vec<f64>, precision: Vec<f64>) -> Result<Self> {
        let n = mean.len();
        if precision.len() != n * n {
            return Err(Error::LengthMismatch {
                expected: n * n,
                actual: precision.len(),
            });
        }
        Ok(Self { mean, precision })
    }

    pub fn standard(dim: usize) -> Self {
        let mut precision = vec![0.0; dim * dim];
        for i in 0..dim {
            precision[i * dim + i] = 1.0;
        }
        Self {
            mean: vec![0.0; dim],
            precision,
        }
    }
}

impl GradientTarget for GaussianTarget {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn neglog_and_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let n = self.mean.len();
        let dx: Vec<f64> = x.iter().zip(&self.mean).map(|(a, b)| a - b).collect();
        let mut value = 0.0;
        for i in 0..n {
            let row = &self.precision[i * n..(i + 1) * n];
            grad[i] = row.iter().zip(&dx).map(|(p, d)| p * d).sum();
            value += 0.5 * dx[i] * grad[i];
        }
        value
    }
}
