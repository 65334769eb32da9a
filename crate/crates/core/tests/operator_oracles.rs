mod common;

use besov_decomp::linalg::{
    cgls_solve, Block, CglsOptions, DenseOperator, LinearOperator, RowScale, StackedLsqProblem,
};
use besov_decomp::operators::{ConvOperator, GradOperator};
use besov_decomp::{Grid, RngHandle};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn d1(n: usize) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        d[(i, i)] = -1.0;
        d[(i, (i + 1) % n)] = 1.0;
    }
    d
}

#[test]
fn gradient_matches_kronecker_form() {
    let grid = Grid::new(2, 2).unwrap();
    let dense = common::dense_of(&GradOperator::new(grid));
    let eye = DMatrix::<f64>::identity(4, 4);
    let d = d1(4);
    let mut expected = DMatrix::zeros(32, 16);
    expected.view_mut((0, 0), (16, 16)).copy_from(&eye.kronecker(&d));
    expected.view_mut((16, 0), (16, 16)).copy_from(&d.kronecker(&eye));
    assert_eq!(dense, expected);

    let grid = Grid::new(1, 4).unwrap();
    assert_eq!(common::dense_of(&GradOperator::new(grid)), d1(16));
}

#[test]
fn gradient_adjoint_is_the_transpose() {
    for (dim, levels) in [(1, 5), (2, 3)] {
        let grad = GradOperator::new(Grid::new(dim, levels).unwrap());
        let dense = common::dense_of(&grad);
        let mut rng = RngHandle::new(3, 0);
        let v = common::randn(grad.output_len(), &mut rng);
        let mut out = vec![0.0; grad.cols()];
        grad.apply_adjoint(&v, &mut out);
        let expected = dense.transpose() * common::dvec(&v);
        for i in 0..out.len() {
            assert!((out[i] - expected[i]).abs() < 1e-12);
        }
    }
}

#[test]
fn blur_is_a_symmetric_stochastic_circulant() {
    for (dim, levels, sigma) in [(1, 6, 0.03), (2, 4, 1.0 / 16.0)] {
        let grid = Grid::new(dim, levels).unwrap();
        let a = common::dense_of(&ConvOperator::gaussian(grid, sigma).unwrap());
        assert!((&a - a.transpose()).abs().max() < 1e-15);
        for row in a.row_iter() {
            assert!((row.sum() - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|w| *w >= 0.0));
        }
        if dim == 1 {
            let n = grid.len();
            for i in 0..n {
                for j in 0..n {
                    assert!((a[(i, j)] - a[((i + 1) % n, (j + 1) % n)]).abs() < 1e-15);
                }
            }
        }
    }
}

#[test]
fn blur_adjoint_is_the_transpose() {
    let grid = Grid::new(2, 3).unwrap();
    let op = ConvOperator::gaussian(grid, 0.2).unwrap();
    let dense = common::dense_of(&op);
    let mut rng = RngHandle::new(4, 0);
    let y = common::randn(64, &mut rng);
    let mut out = vec![0.0; 64];
    op.adjoint_into(&y, &mut out);
    let expected = dense.transpose() * common::dvec(&y);
    for i in 0..64 {
        assert!((out[i] - expected[i]).abs() < 1e-12);
    }
}

fn random_dense(rows: usize, cols: usize, rng: &mut RngHandle) -> (DenseOperator, DMatrix<f64>) {
    let data = common::randn(rows * cols, rng);
    let m = DMatrix::from_row_slice(rows, cols, &data);
    (DenseOperator::new(rows, cols, data).unwrap(), m)
}

#[test]
fn cgls_matches_dense_least_squares() {
    let mut rng = RngHandle::new(5, 0);
    let (a, am) = random_dense(20, 10, &mut rng);
    let eye = DenseOperator::identity(10);
    let diag: Vec<f64> = (0..10).map(|i| 0.5 + 0.1 * i as f64).collect();
    let b = common::randn(30, &mut rng);
    let prob = StackedLsqProblem::new(
        vec![
            Block {
                op: &a,
                scale: RowScale::Scalar(2.0),
            },
            Block {
                op: &eye,
                scale: RowScale::Diagonal(diag.clone()),
            },
        ],
        b.clone(),
    )
    .unwrap();
    let opts = CglsOptions {
        tol: 1e-13,
        max_iter: 200,
        check_adjoint: true,
    };
    let out = cgls_solve(&prob, &opts).unwrap();
    assert!(out.converged);

    let mut m = DMatrix::zeros(30, 10);
    m.view_mut((0, 0), (20, 10)).copy_from(&(am * 2.0));
    for i in 0..10 {
        m[(20 + i, i)] = diag[i];
    }
    let x = (m.transpose() * &m)
        .cholesky()
        .unwrap()
        .solve(&(m.transpose() * common::dvec(&b)));
    for i in 0..10 {
        assert!((out.x[i] - x[i]).abs() < 1e-9 * (1.0 + x[i].abs()), "{i}");
    }
}

#[test]
fn cgls_is_exact_for_a_consistent_system() {
    let mut rng = RngHandle::new(6, 0);
    let (a, am) = random_dense(20, 10, &mut rng);
    let x_true = common::randn(10, &mut rng);
    let b = (am * common::dvec(&x_true)).as_slice().to_vec();
    let prob = StackedLsqProblem::new(
        vec![Block {
            op: &a,
            scale: RowScale::Scalar(1.0),
        }],
        b,
    )
    .unwrap();
    let out = cgls_solve(
        &prob,
        &CglsOptions {
            tol: 1e-14,
            max_iter: 100,
            check_adjoint: false,
        },
    )
    .unwrap();
    for i in 0..10 {
        assert!((out.x[i] - x_true[i]).abs() < 1e-9);
    }
}

fn residual(prob: &StackedLsqProblem, x: &[f64]) -> f64 {
    let mut r = vec![0.0; prob.rows()];
    prob.apply(x, &mut r);
    r.iter()
        .zip(prob.rhs())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn cgls_residual_never_increases(seed in any::<u64>()) {
        let mut rng = RngHandle::new(seed, 0);
        let (a, _) = random_dense(20, 10, &mut rng);
        let b = common::randn(20, &mut rng);
        let prob = StackedLsqProblem::new(
            vec![Block { op: &a, scale: RowScale::Scalar(1.0) }],
            b,
        ).unwrap();
        let mut last = residual(&prob, &[0.0; 10]);
        for k in 1..=10 {
            let out = cgls_solve(&prob, &CglsOptions { tol: 1e-300, max_iter: k, check_adjoint: false }).unwrap();
            let r = residual(&prob, &out.x);
            prop_assert!(r <= last * (1.0 + 1e-12) + 1e-12);
            last = r;
        }
    }

    #[test]
    fn gradient_annihilates_constants(c in -10.0f64..10.0, two_d in any::<bool>()) {
        let grid = Grid::new(if two_d { 2 } else { 1 }, 4).unwrap();
        let grad = GradOperator::new(grid);
        let mut out = vec![1.0; grad.output_len()];
        grad.apply_into(&vec![c; grid.len()], &mut out);
        prop_assert!(out.iter().all(|v| *v == 0.0));
    }
}
