mod common;

use besov_decomp::wavelet::{level_range, Dwt, WaveletBasis};
use besov_decomp::{Grid, RngHandle};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn dense_dwt(dwt: &Dwt) -> DMatrix<f64> {
    let n = dwt.grid().len();
    let mut w = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let c = dwt.forward_vec(&e);
        w.column_mut(j).copy_from_slice(&c);
        e[j] = 0.0;
    }
    w
}

fn orders() -> impl Strategy<Value = usize> {
    prop::sample::select(vec![1usize, 2, 4, 8])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn round_trip_and_parseval(order in orders(), levels in 3u32..=9, two_d in any::<bool>(), seed in any::<u64>()) {
        let dim = if two_d { 2 } else { 1 };
        let levels = if two_d { levels.min(7) } else { levels };
        let grid = Grid::new(dim, levels).unwrap();
        let dwt = Dwt::new(WaveletBasis::daubechies(order).unwrap(), grid);
        let mut rng = RngHandle::new(seed, 0);
        let x = common::randn(grid.len(), &mut rng);
        let c = dwt.forward_vec(&x);
        let back = dwt.inverse_vec(&c);
        let energy: f64 = x.iter().map(|v| v * v).sum();
        let coeff_energy: f64 = c.iter().map(|v| v * v).sum();
        prop_assert!((energy - coeff_energy).abs() <= 1e-10 * energy);
        for (a, b) in x.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-10 * energy.sqrt());
        }
        let inv = dwt.inverse_vec(&x);
        let fwd = dwt.forward_vec(&inv);
        for (a, b) in x.iter().zip(&fwd) {
            prop_assert!((a - b).abs() <= 1e-10 * energy.sqrt());
        }
    }

    #[test]
    fn transform_is_linear(order in orders(), seed in any::<u64>(), a in -3.0f64..3.0) {
        let grid = Grid::new(1, 6).unwrap();
        let dwt = Dwt::new(WaveletBasis::daubechies(order).unwrap(), grid);
        let mut rng = RngHandle::new(seed, 1);
        let x = common::randn(64, &mut rng);
        let y = common::randn(64, &mut rng);
        let z: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + v).collect();
        let (cx, cy, cz) = (dwt.forward_vec(&x), dwt.forward_vec(&y), dwt.forward_vec(&z));
        for i in 0..64 {
            prop_assert!((cz[i] - a * cx[i] - cy[i]).abs() < 1e-12 * (1.0 + a.abs()) * 10.0);
        }
    }
}

#[test]
fn dense_matrix_is_orthogonal() {
    for order in [1usize, 2, 4, 8] {
        for (dim, levels) in [(1, 3), (1, 5), (1, 7), (2, 3), (2, 4)] {
            let grid = Grid::new(dim, levels).unwrap();
            let w = dense_dwt(&Dwt::new(WaveletBasis::daubechies(order).unwrap(), grid));
            let n = grid.len();
            let err = (w.transpose() * &w - DMatrix::<f64>::identity(n, n)).abs().max();
            assert!(err < 1e-10, "DB{order} d={dim} J={levels}: {err}");
            let err = (&w * w.transpose() - DMatrix::<f64>::identity(n, n)).abs().max();
            assert!(err < 1e-10, "DB{order} d={dim} J={levels}: {err}");
        }
    }
}

#[test]
fn constant_signal_lives_in_the_coarsest_coefficient() {
    for order in [1usize, 2, 4, 8] {
        for dim in [1, 2] {
            let grid = Grid::new(dim, 5).unwrap();
            let dwt = Dwt::new(WaveletBasis::daubechies(order).unwrap(), grid);
            let c = dwt.forward_vec(&vec![1.0; grid.len()]);
            let expected = (grid.len() as f64).sqrt();
            assert!((c[0] - expected).abs() < 1e-10);
            assert!(c[1..].iter().all(|v| v.abs() < 1e-10), "DB{order} d={dim}");
        }
    }
}

#[test]
fn level_ranges_tile_the_coefficients() {
    for dim in [1, 2] {
        let grid = Grid::new(dim, 6).unwrap();
        let mut next = 1;
        for j in 0..6 {
            let r = level_range(grid, j);
            assert_eq!(r.start, next);
            next = r.end;
        }
        assert_eq!(next, grid.len());
    }
}
