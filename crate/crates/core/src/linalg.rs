//! Matrix-free conjugate gradient least squares (CGLS).

use crate::error::{Error, Result};
use crate::grid::{dot, norm2};
use crate::rng::RngHandle;

/// A linear map given only by its action and the action of its transpose.
pub trait LinearOperator {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    /// `out = M x`; `out` is overwritten.
    fn apply(&self, x: &[f64], out: &mut [f64]);
    /// `out = M^T y`; `out` is overwritten.
    fn apply_adjoint(&self, y: &[f64], out: &mut [f64]);
}

/// Row scaling applied on top of a block's operator.
#[derive(Debug, Clone)]
pub enum RowScale {
    Scalar(f64),
    Diagonal(Vec<f64>),
}

impl RowScale {
    fn scale(&self, v: &mut [f64]) {
        match self {
            RowScale::Scalar(s) => {
                if *s != 1.0 {
                    v.iter_mut().for_each(|x| *x *= s);
                }
            }
            RowScale::Diagonal(d) => v.iter_mut().zip(d).for_each(|(x, s)| *x *= s),
        }
    }
}

pub struct Block<'a> {
    pub op: &'a dyn LinearOperator,
    pub scale: RowScale,
}

/// `min_x || [s_1 M_1; s_2 M_2; ...] x - b ||_2`.
pub struct StackedLsqProblem<'a> {
    blocks: Vec<Block<'a>>,
    rhs: Vec<f64>,
    cols: usize,
}

impl<'a> StackedLsqProblem<'a> {
    pub fn new(blocks: Vec<Block<'a>>, rhs: Vec<f64>) -> Result<Self> {
        let cols = blocks
            .first()
            .map(|b| b.op.cols())
            .ok_or_else(|| Error::InvalidParameter("no blocks".into()))?;
        let mut rows = 0;
        for b in &blocks {
            if b.op.cols() != cols {
                return Err(Error::LengthMismatch {
                    expected: cols,
                    actual: b.op.cols(),
                });
            }
            if let RowScale::Diagonal(d) = &b.scale {
                if d.len() != b.op.rows() {
                    return Err(Error::LengthMismatch {
                        expected: b.op.rows(),
                        actual: d.len(),
                    });
                }
            }
            rows += b.op.rows();
        }
        if rhs.len() != rows {
            return Err(Error::LengthMismatch {
                expected: rows,
                actual: rhs.len(),
            });
        }
        Ok(Self { blocks, rhs, cols })
    }

    pub fn rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let mut start = 0;
        for b in &self.blocks {
            let seg = &mut out[start..start + b.op.rows()];
            b.op.apply(x, seg);
            b.scale.scale(seg);
            start += b.op.rows();
        }
    }

    /// `out = M^T y`, using `scratch` (length `rows`) for the scaled input.
    pub fn apply_adjoint(&self, y: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        scratch.copy_from_slice(y);
        out.fill(0.0);
        let mut part = vec![0.0; self.cols];
        let mut start = 0;
        for b in &self.blocks {
            let seg = &mut scratch[start..start + b.op.rows()];
            b.scale.scale(seg);
            b.op.apply_adjoint(seg, &mut part);
            out.iter_mut().zip(&part).for_each(|(o, p)| *o += p);
            start += b.op.rows();
        }
    }

    /// Random-probe check of `<M x, y> = <x, M^T y>`.
    pub fn check_adjoint(&self, rng: &mut RngHandle, probes: usize) -> Result<()> {
        let mut x = vec![0.0; self.cols];
        let mut y = vec![0.0; self.rows()];
        let mut mx = vec![0.0; self.rows()];
        let mut mty = vec![0.0; self.cols];
        let mut scratch = vec![0.0; self.rows()];
        for _ in 0..probes {
            rng.fill_standard_normal(&mut x);
            rng.fill_standard_normal(&mut y);
            self.apply(&x, &mut mx);
            self.apply_adjoint(&y, &mut mty, &mut scratch);
            let gap = (dot(&mx, &y) - dot(&x, &mty)).abs();
            let bound = 1e-10 * (norm2(&mx) * norm2(&y) + norm2(&x) * norm2(&mty));
            if gap > bound {
                return Err(Error::AdjointMismatch { gap, bound });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CglsOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Run the adjoint probe before iterating.
    pub check_adjoint: bool,
}

impl Default for CglsOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200,
            check_adjoint: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CglsOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `||M^T (b - M x)|| / ||M^T b||` at the returned iterate.
    pub relres: f64,
    pub converged: bool,
}

/// CGLS from a zero initial guess.
pub fn cgls_solve(prob: &StackedLsqProblem, opts: &CglsOptions) -> Result<CglsOutcome> {
    cgls_solve_from(prob, None, opts)
}

/// CGLS from an optional initial guess. The stopping test is always
/// relative to `||M^T b||`, so a warm start only saves iterations.
pub fn cgls_solve_from(
    prob: &StackedLsqProblem,
    x0: Option<&[f64]>,
    opts: &CglsOptions,
) -> Result<CglsOutcome> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "CGLS tolerance must be positive, got {}",
            opts.tol
        )));
    }
    if opts.check_adjoint {
        prob.check_adjoint(&mut RngHandle::new(0x5eed, 0), 3)?;
    }
    let n = prob.cols();
    let m = prob.rows();
    let mut scratch = vec![0.0; m];

    let mut s = vec![0.0; n];
    prob.apply_adjoint(prob.rhs(), &mut s, &mut scratch);
    let normal_rhs = norm2(&s);

    let mut x = match x0 {
        Some(x0) => {
            if x0.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    actual: x0.len(),
                });
            }
            x0.to_vec()
        }
        None => vec![0.0; n],
    };
    if normal_rhs == 0.0 {
        return Ok(CglsOutcome {
            x: vec![0.0; n],
            iterations: 0,
            relres: 0.0,
            converged: true,
        });
    }

    let mut r = prob.rhs().to_vec();
    let mut q = vec![0.0; m];
    if x0.is_some() {
        prob.apply(&x, &mut q);
        r.iter_mut().zip(&q).for_each(|(ri, qi)| *ri -= qi);
        prob.apply_adjoint(&r, &mut s, &mut scratch);
    }
    let mut p = s.clone();
    let mut gamma = dot(&s, &s);
    let mut relres = gamma.sqrt() / normal_rhs;
    let mut iterations = 0;

    while relres > opts.tol && iterations < opts.max_iter {
        prob.apply(&p, &mut q);
        let qq = dot(&q, &q);
        if qq == 0.0 {
            break;
        }
        let alpha = gamma / qq;
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.iter_mut().zip(&q).for_each(|(ri, qi)| *ri -= alpha * qi);
        prob.apply_adjoint(&r, &mut s, &mut scratch);
        let gamma_new = dot(&s, &s);
        let beta = gamma_new / gamma;
        p.iter_mut().zip(&s).for_each(|(pi, si)| *pi = si + beta * *pi);
        gamma = gamma_new;
        relres = gamma.sqrt() / normal_rhs;
        iterations += 1;
    }

    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("CGLS iterate"));
    }
    Ok(CglsOutcome {
        x,
        iterations,
        relres,
        converged: relres <= opts.tol,
    })
}

/// Dense row-major matrix as a [`LinearOperator`]; handy for small problems
/// and tests.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseOperator {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self {
            rows: n,
            cols: n,
            data,
        }
    }
}

impl LinearOperator for DenseOperator {
    fn rows(&self) -> usize {
        self.rows
    }

    fn cols(&self) -> usize {
        self.cols
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            *o = dot(row, x);
        }
    }

    fn apply_adjoint(&self, y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (yi, row) in y.iter().zip(self.data.chunks_exact(self.cols)) {
            out.iter_mut().zip(row).for_each(|(o, a)| *o += yi * a);
        }
    }
}
