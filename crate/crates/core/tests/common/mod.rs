#![allow(dead_code)]

use besov_decomp::linalg::LinearOperator;
use besov_decomp::RngHandle;
use nalgebra::{DMatrix, DVector};

/// Dense matrix of a matrix-free operator, column by column.
pub fn dense_of(op: &dyn LinearOperator) -> DMatrix<f64> {
    let (m, n) = (op.rows(), op.cols());
    let mut out = DMatrix::zeros(m, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; m];
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, &mut col);
        out.column_mut(j).copy_from_slice(&col);
        e[j] = 0.0;
    }
    out
}

pub fn randn(n: usize, rng: &mut RngHandle) -> Vec<f64> {
    (0..n).map(|_| rng.standard_normal()).collect()
}

pub fn dvec(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

/// Empirical mean and covariance of row samples.
pub fn moments(draws: &[Vec<f64>]) -> (DVector<f64>, DMatrix<f64>) {
    let n = draws[0].len();
    let k = draws.len() as f64;
    let mut mean = DVector::zeros(n);
    for d in draws {
        mean += dvec(d);
    }
    mean /= k;
    let mut cov = DMatrix::zeros(n, n);
    for d in draws {
        let c = dvec(d) - &mean;
        cov += &c * c.transpose();
    }
    cov /= k - 1.0;
    (mean, cov)
}

/// Largest deviation of the empirical moments from a Gaussian law, in
/// Monte Carlo standard errors.
pub fn max_z_scores(
    draws: &[Vec<f64>],
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
) -> (f64, f64) {
    let k = draws.len() as f64;
    let (m, c) = moments(draws);
    let n = mean.len();
    let mut zm: f64 = 0.0;
    let mut zc: f64 = 0.0;
    for i in 0..n {
        zm = zm.max((m[i] - mean[i]).abs() / (cov[(i, i)] / k).sqrt());
        for j in 0..n {
            let se = ((cov[(i, i)] * cov[(j, j)] + cov[(i, j)].powi(2)) / k).sqrt();
            zc = zc.max((c[(i, j)] - cov[(i, j)]).abs() / se);
        }
    }
    (zm, zc)
}

/// Two-sided Kolmogorov-Smirnov statistic and its asymptotic p-value.
pub fn ks_test(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> (f64, f64) {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in samples.iter().enumerate() {
        let f = cdf(*x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let t = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        p += 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * t * t).exp();
    }
    (d, p.clamp(0.0, 1.0))
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}
