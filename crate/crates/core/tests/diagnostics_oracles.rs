mod common;

use besov_decomp::diagnostics::{
    autocorrelation, credible_interval, effective_sample_size, spread, ChainStats,
};
use besov_decomp::samplers::SampleMatrix;
use besov_decomp::RngHandle;
use proptest::prelude::*;

fn ar1(n: usize, rho: f64, seed: u64) -> Vec<f64> {
    let mut rng = RngHandle::new(seed, 0);
    let innov = (1.0 - rho * rho).sqrt();
    let mut x = rng.standard_normal();
    (0..n)
        .map(|_| {
            x = rho * x + innov * rng.standard_normal();
            x
        })
        .collect()
}

#[test]
fn iid_chain_has_ess_near_n() {
    let n = 100_000;
    let chain = ar1(n, 0.0, 41);
    let ess = effective_sample_size(&chain).unwrap();
    assert!(!ess.degenerate);
    assert!((ess.value / n as f64 - 1.0).abs() < 0.1, "{}", ess.value);
}

#[test]
fn ar1_chain_has_ess_near_the_analytic_value() {
    let n = 100_000;
    let chain = ar1(n, 0.9, 42);
    let ess = effective_sample_size(&chain).unwrap().value;
    let exact = n as f64 / 19.0;
    assert!((ess / exact - 1.0).abs() < 0.15, "{ess} vs {exact}");
    let acf = autocorrelation(&chain, 5).unwrap();
    assert_eq!(acf[0], 1.0);
    for (k, r) in acf.iter().enumerate() {
        assert!((r - 0.9f64.powi(k as i32)).abs() < 0.03, "lag {k}: {r}");
    }
}

#[test]
fn standard_normal_credible_width() {
    let mut rng = RngHandle::new(43, 0);
    let data = common::randn(100_000, &mut rng);
    let m = SampleMatrix::from_rows(1, data);
    let ci = credible_interval(&m, 0.95).unwrap();
    assert!((ci.width[0] / 3.919_927_969_080_108 - 1.0).abs() < 0.05, "{}", ci.width[0]);
}

#[test]
fn chain_stats_aggregate_per_coordinate_values() {
    let mut data = Vec::new();
    let a = ar1(2000, 0.5, 44);
    let b = ar1(2000, 0.0, 45);
    let c = ar1(2000, 0.8, 46);
    for i in 0..2000 {
        data.extend([a[i], b[i], c[i]]);
    }
    let m = SampleMatrix::from_rows(3, data);
    let stats = ChainStats::compute(&m, 0.95, &[1], 10).unwrap();
    let per: Vec<f64> = [a, b, c]
        .iter()
        .map(|col| effective_sample_size(col).unwrap().value)
        .collect();
    assert_eq!(stats.ess, per);
    let s = stats.ess_spread().unwrap();
    let direct = spread(&per).unwrap();
    assert_eq!((s.min, s.median, s.max), (direct.min, direct.median, direct.max));
    assert_eq!(stats.acf[0].0, 1);
    assert_eq!(stats.acf[0].1[0], 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ess_is_affine_invariant(seed in any::<u64>(), a in prop_oneof![-50.0f64..-0.01, 0.01f64..50.0], b in -1e3f64..1e3) {
        let chain = ar1(500, 0.6, seed);
        let moved: Vec<f64> = chain.iter().map(|x| a * x + b).collect();
        let e1 = effective_sample_size(&chain).unwrap().value;
        let e2 = effective_sample_size(&moved).unwrap().value;
        prop_assert!((e1 - e2).abs() <= 1e-6 * e1);
    }

    #[test]
    fn ess_is_within_bounds(seed in any::<u64>(), rho in -0.9f64..0.99) {
        let chain = ar1(300, rho, seed);
        let e = effective_sample_size(&chain).unwrap();
        prop_assert!(e.value > 0.0 && e.value <= 300.0);
    }

    #[test]
    fn credible_bounds_are_ordered(seed in any::<u64>(), level in 0.5f64..0.99) {
        let mut rng = RngHandle::new(seed, 0);
        let m = SampleMatrix::from_rows(2, common::randn(400, &mut rng));
        let ci = credible_interval(&m, level).unwrap();
        for j in 0..2 {
            prop_assert!(ci.lower[j] <= ci.upper[j]);
            prop_assert!((ci.width[j] - (ci.upper[j] - ci.lower[j])).abs() < 1e-15);
        }
    }
}

#[test]
fn constant_chain_is_flagged() {
    let e = effective_sample_size(&[2.0; 200]).unwrap();
    assert!(e.degenerate);
    assert_eq!(e.value, 200.0);
}
