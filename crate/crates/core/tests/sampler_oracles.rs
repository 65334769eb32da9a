mod common;

use besov_decomp::diagnostics::effective_sample_size;
use besov_decomp::linalg::CglsOptions;
use besov_decomp::operators::{ConvOperator, GradOperator};
use besov_decomp::priors::{BesovParams, BesovPrior};
use besov_decomp::samplers::rto::rto_sample_besov_component;
use besov_decomp::samplers::{
    gibbs_gaussian_besov, gibbs_two_besov, nuts_sample, recenter_components, rto_sample_g,
    rto_sample_h, GaussianBesovHyper, GaussianTarget, GibbsConfig, GibbsInit, NutsConfig,
    SampleMatrix, TwoBesovHyper,
};
use besov_decomp::wavelet::WaveletBasis;
use besov_decomp::{DecompProblem, Grid, RngHandle, Signal};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

struct Fixture {
    problem: DecompProblem,
    prior_h: BesovPrior,
    a: DMatrix<f64>,
    d: DMatrix<f64>,
    sw: DMatrix<f64>,
}

fn fixture() -> Fixture {
    let grid = Grid::new(1, 4).unwrap();
    let op = ConvOperator::gaussian(grid, 0.07).unwrap();
    let y: Vec<f64> = (0..16)
        .map(|i| if i < 8 { 1.0 } else { 0.0 } + 0.3 * (i as f64 * 0.5).sin())
        .collect();
    let a = common::dense_of(&op);
    let problem = DecompProblem::new(op, 0.2, y).unwrap();
    let prior_h = BesovPrior::new(
        BesovParams::new(2.0, 2.0, 1.0, WaveletBasis::daubechies(2).unwrap(), grid).unwrap(),
    )
    .unwrap();
    let d = common::dense_of(&GradOperator::new(grid));
    let mut w = DMatrix::zeros(16, 16);
    let mut e = vec![0.0; 16];
    for j in 0..16 {
        e[j] = 1.0;
        w.column_mut(j).copy_from_slice(&prior_h.dwt().forward_vec(&e));
        e[j] = 0.0;
    }
    let s = DMatrix::from_diagonal(&DVector::from_column_slice(prior_h.scaling()));
    Fixture {
        problem,
        prior_h,
        a,
        d,
        sw: s * w,
    }
}

fn gaussian(precision: DMatrix<f64>, rhs: DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let chol = precision.cholesky().unwrap();
    (chol.solve(&rhs), chol.inverse())
}

fn opts() -> CglsOptions {
    CglsOptions {
        tol: 1e-12,
        max_iter: 500,
        check_adjoint: false,
    }
}

const DRAWS: usize = 20_000;

#[test]
fn rto_g_draws_follow_the_gaussian_conditional() {
    let fx = fixture();
    let s2 = fx.problem.noise_sigma().powi(2);
    let h = Signal::new(fx.problem.grid(), (0..16).map(|i| 0.05 * i as f64).collect()).unwrap();
    let lam: Vec<f64> = (0..16).map(|i| 0.02 + 0.01 * (i % 5) as f64).collect();
    let linv = DMatrix::from_diagonal(&DVector::from_iterator(16, lam.iter().map(|v| 1.0 / v)));
    let precision = fx.a.transpose() * &fx.a / s2 + fx.d.transpose() * linv * &fx.d;
    let resid = common::dvec(fx.problem.data()) - &fx.a * common::dvec(h.values());
    let (mean, cov) = gaussian(precision, fx.a.transpose() * resid / s2);

    let mut rng = RngHandle::new(21, 0);
    let draws: Vec<Vec<f64>> = (0..DRAWS)
        .map(|_| {
            rto_sample_g(&h, &lam, &fx.problem, &opts(), Some(&mut rng), None)
                .unwrap()
                .signal
                .into_values()
        })
        .collect();
    let (zm, zc) = common::max_z_scores(&draws, &mean, &cov);
    assert!(zm < 5.0 && zc < 5.0, "mean z {zm}, cov z {zc}");

    let centre = rto_sample_g(&h, &lam, &fx.problem, &opts(), None, None).unwrap();
    for i in 0..16 {
        assert!((centre.signal.values()[i] - mean[i]).abs() < 1e-8);
    }
}

#[test]
fn rto_h_draws_follow_the_gaussian_conditional() {
    let fx = fixture();
    let s2 = fx.problem.noise_sigma().powi(2);
    let g = Signal::new(fx.problem.grid(), (0..16).map(|i| (i / 4) as f64 * 0.2).collect()).unwrap();
    let lambda_h = 0.3;
    let precision = fx.a.transpose() * &fx.a / s2 + fx.sw.transpose() * &fx.sw * lambda_h;
    let resid = common::dvec(fx.problem.data()) - &fx.a * common::dvec(g.values());
    let (mean, cov) = gaussian(precision, fx.a.transpose() * resid / s2);

    let mut rng = RngHandle::new(22, 0);
    let draws: Vec<Vec<f64>> = (0..DRAWS)
        .map(|_| {
            rto_sample_h(&g, lambda_h, &fx.prior_h, &fx.problem, &opts(), Some(&mut rng), None)
                .unwrap()
                .signal
                .into_values()
        })
        .collect();
    let (zm, zc) = common::max_z_scores(&draws, &mean, &cov);
    assert!(zm < 5.0 && zc < 5.0, "mean z {zm}, cov z {zc}");

    let centre =
        rto_sample_besov_component(&g, lambda_h, &fx.prior_h, &fx.problem, &opts(), None, None)
            .unwrap();
    for i in 0..16 {
        assert!((centre.signal.values()[i] - mean[i]).abs() < 1e-8);
    }
}

/// Joint Gaussian law of `(g, h)` for fixed hyperparameters, given the two
/// prior precision blocks.
fn joint_law(fx: &Fixture, pg: &DMatrix<f64>, ph: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let s2 = fx.problem.noise_sigma().powi(2);
    let ata = fx.a.transpose() * &fx.a / s2;
    let mut precision = DMatrix::zeros(32, 32);
    precision.view_mut((0, 0), (16, 16)).copy_from(&(&ata + pg));
    precision.view_mut((16, 16), (16, 16)).copy_from(&(&ata + ph));
    precision.view_mut((0, 16), (16, 16)).copy_from(&ata);
    precision.view_mut((16, 0), (16, 16)).copy_from(&ata);
    let aty = fx.a.transpose() * common::dvec(fx.problem.data()) / s2;
    let mut rhs = DVector::zeros(32);
    rhs.rows_mut(0, 16).copy_from(&aty);
    rhs.rows_mut(16, 16).copy_from(&aty);
    gaussian(precision, rhs)
}

/// Checks chain means against the analytic ones using ESS-based standard
/// errors.
fn check_means(samples: &SampleMatrix, mean: &[f64], var: &[f64]) {
    for j in 0..samples.cols() {
        let col = samples.column(j);
        let ess = effective_sample_size(&col).unwrap().value;
        let m = common::mean(&col);
        let se = (var[j] / ess).sqrt();
        assert!((m - mean[j]).abs() < 5.0 * se, "coord {j}: {m} vs {} (se {se})", mean[j]);
    }
}

fn check_variances(samples: &SampleMatrix, var: &[f64]) {
    for j in 0..samples.cols() {
        let col = samples.column(j);
        let m = common::mean(&col);
        let v = col.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (col.len() - 1) as f64;
        assert!((v / var[j] - 1.0).abs() < 0.15, "coord {j}: {v} vs {}", var[j]);
    }
}

#[test]
fn gibbs_with_fixed_hyperparameters_targets_the_joint_gaussian() {
    let fx = fixture();
    let lam = vec![0.05; 16];
    let lambda_h = 0.5;
    let pg = fx.d.transpose() * &fx.d / 0.05;
    let ph = fx.sw.transpose() * &fx.sw * lambda_h;
    let (mean, cov) = joint_law(&fx, &pg, &ph);

    let mut config = GibbsConfig::new(30_000, 1_000, 1);
    config.cgls = opts();
    config.update_hyper = false;
    config.recenter = false;
    config.init = GibbsInit {
        lambda_diag: Some(lam),
        lambda_h: Some(lambda_h),
        ..Default::default()
    };
    let hyper = GaussianBesovHyper {
        alpha1: 1.0,
        beta1: 1e-5,
        alpha2: 2.0,
        beta2: 1e-2,
    };
    let mut rng = RngHandle::new(23, 0);
    let chain = gibbs_gaussian_besov(&fx.problem, &fx.prior_h, &hyper, &config, &mut rng).unwrap();
    assert_eq!(chain.rows(), 29_000);
    assert_eq!(chain.meta.cgls_nonconverged, 0);

    let var: Vec<f64> = (0..32).map(|i| cov[(i, i)]).collect();
    check_means(chain.get("g").unwrap(), &mean.as_slice()[..16], &var[..16]);
    check_means(chain.get("h").unwrap(), &mean.as_slice()[16..], &var[16..]);

    let mut fsum = DMatrix::zeros(16, 32);
    for i in 0..16 {
        fsum[(i, i)] = 1.0;
        fsum[(i, 16 + i)] = 1.0;
    }
    let fmean = &fsum * &mean;
    let fcov = &fsum * &cov * fsum.transpose();
    let fvar: Vec<f64> = (0..16).map(|i| fcov[(i, i)]).collect();
    check_means(chain.get("f").unwrap(), fmean.as_slice(), &fvar);
    check_variances(chain.get("f").unwrap(), &fvar);
    check_variances(chain.get("g").unwrap(), &var[..16]);

    let lh = chain.get("lambda_h").unwrap();
    assert!(lh.as_slice().iter().all(|v| *v == lambda_h));
}

#[test]
fn two_besov_gibbs_with_fixed_strengths_targets_the_joint_gaussian() {
    let fx = fixture();
    let grid = fx.problem.grid();
    let prior_g = BesovPrior::new(
        BesovParams::new(1.0, 2.0, 1.0, WaveletBasis::haar(), grid).unwrap(),
    )
    .unwrap();
    let mut wg = DMatrix::zeros(16, 16);
    let mut e = vec![0.0; 16];
    for j in 0..16 {
        e[j] = 1.0;
        wg.column_mut(j).copy_from_slice(&prior_g.dwt().forward_vec(&e));
        e[j] = 0.0;
    }
    let swg = DMatrix::from_diagonal(&DVector::from_column_slice(prior_g.scaling())) * wg;
    let (lg, lh) = (0.4, 0.7);
    let pg = swg.transpose() * &swg * (2.0 * lg);
    let ph = fx.sw.transpose() * &fx.sw * (2.0 * lh);
    let (mean, cov) = joint_law(&fx, &pg, &ph);

    let mut config = GibbsConfig::new(30_000, 1_000, 1);
    config.cgls = opts();
    config.update_hyper = false;
    config.recenter = false;
    config.init = GibbsInit {
        lambda_g: Some(lg),
        lambda_h: Some(lh),
        ..Default::default()
    };
    let hyper = TwoBesovHyper {
        a1: 1.0,
        b1: 1e-3,
        a2: 1.0,
        b2: 1e-3,
    };
    let mut rng = RngHandle::new(24, 0);
    let chain =
        gibbs_two_besov(&fx.problem, &prior_g, &fx.prior_h, &hyper, &config, &mut rng).unwrap();
    let var: Vec<f64> = (0..32).map(|i| cov[(i, i)]).collect();
    check_means(chain.get("g").unwrap(), &mean.as_slice()[..16], &var[..16]);
    check_means(chain.get("h").unwrap(), &mean.as_slice()[16..], &var[16..]);
}

#[test]
fn identity_blur_with_tiny_noise_reproduces_the_data() {
    let grid = Grid::new(1, 5).unwrap();
    let y: Vec<f64> = (0..32).map(|i| if (8..20).contains(&i) { 1.0 } else { 0.2 }).collect();
    let problem = DecompProblem::new(ConvOperator::identity(grid), 1e-4, y.clone()).unwrap();
    let prior_h = BesovPrior::new(
        BesovParams::new(2.0, 2.0, 1.0, WaveletBasis::daubechies(4).unwrap(), grid).unwrap(),
    )
    .unwrap();
    let mut config = GibbsConfig::new(400, 100, 1);
    config.cgls.max_iter = 1000;
    let hyper = GaussianBesovHyper {
        alpha1: 1.0,
        beta1: 1e-5,
        alpha2: 2.0,
        beta2: 1e-2,
    };
    let mut rng = RngHandle::new(25, 0);
    let chain = gibbs_gaussian_besov(&problem, &prior_h, &hyper, &config, &mut rng).unwrap();
    let fmean = chain.get("f").unwrap().column_means();
    for (m, v) in fmean.iter().zip(&y) {
        assert!((m - v).abs() < 1e-2, "{m} vs {v}");
    }
}

#[test]
fn gibbs_runs_are_reproducible() {
    let fx = fixture();
    let hyper = GaussianBesovHyper {
        alpha1: 1.0,
        beta1: 1e-5,
        alpha2: 2.0,
        beta2: 1e-2,
    };
    let mut config = GibbsConfig::new(200, 50, 3);
    config.cgls.max_iter = 1000;
    let a = gibbs_gaussian_besov(&fx.problem, &fx.prior_h, &hyper, &config, &mut RngHandle::new(5, 100)).unwrap();
    let b = gibbs_gaussian_besov(&fx.problem, &fx.prior_h, &hyper, &config, &mut RngHandle::new(5, 100)).unwrap();
    assert_eq!(a.variables, b.variables);
    assert_eq!(a.rows(), 50);
    let f = a.get("f").unwrap();
    let (g, h) = (a.get("g").unwrap(), a.get("h").unwrap());
    for r in 0..f.rows() {
        let gm = common::mean(g.row(r));
        assert!(gm.abs() < 1e-12);
        for j in 0..16 {
            assert!((g.row(r)[j] + h.row(r)[j] - f.row(r)[j]).abs() < 1e-12);
        }
    }
    assert_eq!(a.get("lambda_diag").unwrap().cols(), 16);
}

fn nuts_moments(mean: Vec<f64>, cov: DMatrix<f64>, seed: u64) {
    let dim = mean.len();
    let precision = cov.clone().try_inverse().unwrap();
    let target = GaussianTarget::new(mean.clone(), precision.transpose().as_slice().to_vec()).unwrap();
    let mut rng = RngHandle::new(seed, 0);
    let chain = nuts_sample(&target, &vec![0.0; dim], 11_000, 1_000, &NutsConfig::default(), &mut rng)
        .unwrap();
    let x = chain.get("x").unwrap();
    assert_eq!(x.rows(), 10_000);
    let draws: Vec<Vec<f64>> = x.iter_rows().map(|r| r.to_vec()).collect();
    let (m, c) = common::moments(&draws);
    for i in 0..dim {
        assert!((m[i] / mean[i] - 1.0).abs() < 0.1, "mean {i}: {}", m[i]);
        for j in 0..dim {
            assert!((c[(i, j)] / cov[(i, j)] - 1.0).abs() < 0.1, "cov {i}{j}: {}", c[(i, j)]);
        }
    }
    assert_eq!(chain.meta.divergences, 0);
    let accept = chain.meta.mean_accept.unwrap();
    assert!(accept > 0.6 && accept < 0.95, "{accept}");
}

#[test]
fn nuts_recovers_gaussian_moments() {
    nuts_moments(vec![1.5], DMatrix::from_element(1, 1, 4.0), 31);
    let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.9 * 2.0, 0.9 * 2.0, 4.0]);
    nuts_moments(vec![1.0, -2.0], cov, 32);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn recentering_preserves_the_sum(seed in any::<u64>(), shift in -100.0f64..100.0) {
        let grid = Grid::new(1, 6).unwrap();
        let mut rng = RngHandle::new(seed, 0);
        let g = Signal::new(grid, common::randn(64, &mut rng).iter().map(|v| v + shift).collect()).unwrap();
        let h = Signal::new(grid, common::randn(64, &mut rng)).unwrap();
        let (g2, h2) = recenter_components(&g, &h).unwrap();
        prop_assert!(g2.mean().abs() < 1e-13 * (1.0 + shift.abs()));
        for i in 0..64 {
            let before = g.values()[i] + h.values()[i];
            let after = g2.values()[i] + h2.values()[i];
            prop_assert!((before - after).abs() <= 1e-15 * 4.0 * (1.0 + before.abs() + shift.abs()));
        }
    }
}
