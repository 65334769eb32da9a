//! No-U-Turn sampler with dual-averaging step-size adaptation.
//!
//! This is the slice-variable formulation with recursive tree doubling
//! (Hoffman & Gelman, 2014, algorithms 3 and 6) with an identity mass matrix.
//! The step size is adapted only during burn-in and then frozen at its
//! averaged value.

use std::rc::Rc;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::rng::RngHandle;
use crate::samplers::chain::{is_kept, kept_count, ChainMeta, ChainStore, SampleMatrix};
use crate::samplers::posterior::GradientTarget;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NutsConfig {
    pub max_depth: usize,
    pub target_accept: f64,
    /// Dual averaging: shrinkage `gamma`, offset `t0`, decay `kappa`.
    pub gamma: f64,
    pub t0: f64,
    pub kappa: f64,
    /// Energy error beyond which a trajectory is declared divergent.
    pub delta_max: f64,
    pub thin: usize,
}

impl Default for NutsConfig {
    fn default() -> Self {
        Self {
            max_depth: 10,
            target_accept: 0.8,
            gamma: 0.05,
            t0: 10.0,
            kappa: 0.75,
            delta_max: 1000.0,
            thin: 1,
        }
    }
}

#[derive(Clone)]
struct Point {
    theta: Vec<f64>,
    r: Vec<f64>,
    grad: Vec<f64>,
    /// log density `L(theta)`
    logp: f64,
}

impl Point {
    fn kinetic(&self) -> f64 {
        0.5 * self.r.iter().map(|v| v * v).sum::<f64>()
    }

    fn joint(&self) -> f64 {
        self.logp - self.kinetic()
    }
}

struct Tree {
    minus: Rc<Point>,
    plus: Rc<Point>,
    proposal: Rc<Point>,
    n_valid: f64,
    keep_going: bool,
    alpha_sum: f64,
    n_alpha: f64,
    divergent: bool,
}

struct Sampler<'a, T: GradientTarget + ?Sized> {
    target: &'a T,
    grad_evals: u64,
}

impl<T: GradientTarget + ?Sized> Sampler<'_, T> {
    fn eval(&mut self, theta: &[f64], grad: &mut [f64]) -> f64 {
        self.grad_evals += 1;
        let neglog = self.target.neglog_and_grad(theta, grad);
        // L = -neglog, so dL = -grad.
        grad.iter_mut().for_each(|g| *g = -*g);
        -neglog
    }

    fn leapfrog(&mut self, p: &Point, eps: f64) -> Point {
        let mut r: Vec<f64> = p
            .r
            .iter()
            .zip(&p.grad)
            .map(|(r, g)| r + 0.5 * eps * g)
            .collect();
        let theta: Vec<f64> = p.theta.iter().zip(&r).map(|(t, r)| t + eps * r).collect();
        let mut grad = vec![0.0; theta.len()];
        let logp = self.eval(&theta, &mut grad);
        r.iter_mut()
            .zip(&grad)
            .for_each(|(r, g)| *r += 0.5 * eps * g);
        Point {
            theta,
            r,
            grad,
            logp,
        }
    }

    fn find_reasonable_epsilon(&mut self, start: &Point, rng: &mut RngHandle) -> f64 {
        let mut eps = 1.0;
        let mut p0 = start.clone();
        rng.fill_standard_normal(&mut p0.r);
        let h0 = p0.joint();
        let ratio = |s: &mut Self, eps: f64| {
            let p1 = s.leapfrog(&p0, eps);
            let d = p1.joint() - h0;
            if d.is_finite() {
                d
            } else {
                f64::NEG_INFINITY
            }
        };
        let mut log_ratio = ratio(self, eps);
        let a: f64 = if log_ratio > 0.5f64.ln() { 1.0 } else { -1.0 };
        for _ in 0..100 {
            if a * log_ratio <= -a * 2f64.ln() {
                break;
            }
            eps *= 2f64.powf(a);
            log_ratio = ratio(self, eps);
        }
        eps
    }

    #[allow(clippy::too_many_arguments)]
    fn build_tree(
        &mut self,
        p: &Point,
        log_u: f64,
        dir: f64,
        depth: usize,
        eps: f64,
        joint0: f64,
        delta_max: f64,
        rng: &mut RngHandle,
    ) -> Tree {
        if depth == 0 {
            let q = Rc::new(self.leapfrog(p, dir * eps));
            let joint = q.joint();
            let joint = if joint.is_finite() {
                joint
            } else {
                f64::NEG_INFINITY
            };
            let n_valid = if log_u <= joint { 1.0 } else { 0.0 };
            let keep_going = log_u < delta_max + joint;
            let alpha = (joint - joint0).exp().min(1.0);
            return Tree {
                minus: Rc::clone(&q),
                plus: Rc::clone(&q),
                proposal: q,
                n_valid,
                keep_going,
                alpha_sum: if alpha.is_nan() { 0.0 } else { alpha },
                n_alpha: 1.0,
                divergent: !keep_going,
            };
        }
        let mut tree = self.build_tree(p, log_u, dir, depth - 1, eps, joint0, delta_max, rng);
        if !tree.keep_going {
            return tree;
        }
        let edge = Rc::clone(if dir < 0.0 { &tree.minus } else { &tree.plus });
        let sub = self.build_tree(
            &edge,
            log_u,
            dir,
            depth - 1,
            eps,
            joint0,
            delta_max,
            rng,
        );
        let total = tree.n_valid + sub.n_valid;
        if total > 0.0 && rng.uniform() < sub.n_valid / total {
            tree.proposal = sub.proposal;
        }
        if dir < 0.0 {
            tree.minus = sub.minus;
        } else {
            tree.plus = sub.plus;
        }
        tree.alpha_sum += sub.alpha_sum;
        tree.n_alpha += sub.n_alpha;
        tree.divergent |= sub.divergent;
        tree.keep_going = sub.keep_going && no_u_turn(&tree.minus, &tree.plus);
        tree.n_valid = total;
        tree
    }
}

fn no_u_turn(minus: &Point, plus: &Point) -> bool {
    let mut dot_minus = 0.0;
    let mut dot_plus = 0.0;
    for i in 0..minus.theta.len() {
        let span = plus.theta[i] - minus.theta[i];
        dot_minus += span * minus.r[i];
        dot_plus += span * plus.r[i];
    }
    dot_minus >= 0.0 && dot_plus >= 0.0
}

/// Runs `n_samples` NUTS iterations from `init`, the first `burn_in` of which
/// adapt the step size and are discarded. Kept states are stored under
/// `"x"`; callers split them into named components.
pub fn nuts_sample<T: GradientTarget + ?Sized>(
    target: &T,
    init: &[f64],
    n_samples: usize,
    burn_in: usize,
    config: &NutsConfig,
    rng: &mut RngHandle,
) -> Result<ChainStore> {
    let dim = target.dim();
    if init.len() != dim {
        return Err(Error::LengthMismatch {
            expected: dim,
            actual: init.len(),
        });
    }
    if burn_in >= n_samples {
        return Err(Error::InvalidParameter(format!(
            "burn-in {burn_in} must be smaller than the sample count {n_samples}"
        )));
    }
    if config.thin == 0 {
        return Err(Error::InvalidParameter("thin must be >= 1".into()));
    }
    let started = Instant::now();
    let mut sampler = Sampler {
        target,
        grad_evals: 0,
    };

    let mut grad = vec![0.0; dim];
    let logp = sampler.eval(init, &mut grad);
    if !logp.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("log posterior at the initial state"));
    }
    let mut current = Rc::new(Point {
        theta: init.to_vec(),
        r: vec![0.0; dim],
        grad,
        logp,
    });

    let mut eps = sampler.find_reasonable_epsilon(&current, rng);
    let mu = (10.0 * eps).ln();
    let mut log_eps_bar = 0.0;
    let mut h_bar = 0.0;

    let mut draws = SampleMatrix::with_capacity(dim, kept_count(n_samples, burn_in, config.thin));
    let mut divergences = 0;
    let mut accept_sum = 0.0;
    let mut depth_sum = 0usize;

    for it in 0..n_samples {
        let mut start = (*current).clone();
        rng.fill_standard_normal(&mut start.r);
        let joint0 = start.joint();
        let start = Rc::new(start);
        // log u with u ~ Uniform(0, exp(joint0)).
        let log_u = joint0 + (1.0 - rng.uniform()).ln();

        let mut minus = Rc::clone(&start);
        let mut plus = Rc::clone(&start);
        let mut n_valid = 1.0;
        let mut depth = 0;
        let mut alpha_sum = 0.0;
        let mut n_alpha = 0.0;
        let mut divergent = false;

        while depth < config.max_depth {
            let dir = if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
            let edge = Rc::clone(if dir < 0.0 { &minus } else { &plus });
            let tree = sampler.build_tree(
                &edge,
                log_u,
                dir,
                depth,
                eps,
                joint0,
                config.delta_max,
                rng,
            );
            if dir < 0.0 {
                minus = tree.minus;
            } else {
                plus = tree.plus;
            }
            alpha_sum += tree.alpha_sum;
            n_alpha += tree.n_alpha;
            divergent |= tree.divergent;
            if tree.keep_going && rng.uniform() < (tree.n_valid / n_valid).min(1.0) {
                current = tree.proposal;
            }
            n_valid += tree.n_valid;
            depth += 1;
            if !(tree.keep_going && no_u_turn(&minus, &plus)) {
                break;
            }
        }
        if divergent && it >= burn_in {
            divergences += 1;
        }
        let accept_stat = if n_alpha > 0.0 { alpha_sum / n_alpha } else { 0.0 };

        if it < burn_in {
            let m = (it + 1) as f64;
            let w = 1.0 / (m + config.t0);
            h_bar = (1.0 - w) * h_bar + w * (config.target_accept - accept_stat);
            let log_eps = mu - m.sqrt() / config.gamma * h_bar;
            let decay = m.powf(-config.kappa);
            log_eps_bar = decay * log_eps + (1.0 - decay) * log_eps_bar;
            eps = log_eps.exp();
            if it + 1 == burn_in {
                eps = log_eps_bar.exp();
            }
        } else {
            accept_sum += accept_stat;
            depth_sum += depth;
        }

        if is_kept(it, burn_in, config.thin) {
            draws.push(&current.theta);
        }
    }

    let post = (n_samples - burn_in) as f64;
    let mut store = ChainStore::default();
    store.insert("x", draws);
    store.meta = ChainMeta {
        sampler: "nuts".into(),
        n_samples,
        burn_in,
        thin: config.thin,
        seed: rng.seed(),
        stream_id: rng.stream_id(),
        wall_time_secs: started.elapsed().as_secs_f64(),
        divergences,
        step_size: Some(eps),
        mean_accept: Some(accept_sum / post),
        mean_tree_depth: Some(depth_sum as f64 / post),
        grad_evals: sampler.grad_evals,
        ..Default::default()
    };
    Ok(store)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::posterior::GaussianTarget;

    #[test]
    fn rejects_bad_setup() {
        let t = GaussianTarget::standard(2);
        let mut rng = RngHandle::new(0, 0);
        let cfg = NutsConfig::default();
        assert!(nuts_sample(&t, &[0.0], 10, 5, &cfg, &mut rng).is_err());
        assert!(nuts_sample(&t, &[0.0, 0.0], 10, 10, &cfg, &mut rng).is_err());
    }

    #[test]
    fn reproducible() {
        let t = GaussianTarget::standard(3);
        let cfg = NutsConfig::default();
        let a = nuts_sample(&t, &[0.0; 3], 300, 100, &cfg, &mut RngHandle::new(4, 1)).unwrap();
        let b = nuts_sample(&t, &[0.0; 3], 300, 100, &cfg, &mut RngHandle::new(4, 1)).unwrap();
        assert_eq!(a.variables, b.variables);
        assert_eq!(a.get("x").unwrap().rows(), 200);
    }

    #[test]
    fn standard_normal_moments() {
        let t = GaussianTarget::standard(1);
        let cfg = NutsConfig::default();
        let run = nuts_sample(&t, &[0.0], 11_000, 1_000, &cfg, &mut RngHandle::new(7, 0)).unwrap();
        let x = run.get("x").unwrap().column(0);
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() <= 0.05, "mean {mean}");
        assert!((0.9..=1.1).contains(&var), "var {var}");
        let acc = run.meta.mean_accept.unwrap();
        assert!(acc > 0.6, "accept {acc}");
    }
}
