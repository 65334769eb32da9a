//! Periodic Gaussian blur and forward-difference gradient operators.
//!
//! Both act matrix-free on row-major data. In 2D the blur is separable (rows
//! first, then columns) and the gradient stacks all horizontal differences
//! before all vertical ones.

use crate::error::{Error, Result};
use crate::grid::{Grid, Signal};
use crate::linalg::LinearOperator;

/// Circulant blur with a truncated, renormalized, sampled Gaussian kernel.
#[derive(Debug, Clone)]
pub struct ConvOperator {
    grid: Grid,
    sigma: f64,
    /// `(offset, weight)` pairs; offsets are signed grid steps.
    taps: Vec<(isize, f64)>,
}

impl ConvOperator {
    /// Samples `exp(-x^2 / (2 sigma^2))` at grid points with `|x| <= 3 sigma`,
    /// wraps periodically and rescales the weights to sum to one.
    pub fn gaussian(grid: Grid, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "kernel sigma must be positive, got {sigma}"
            )));
        }
        let h = grid.spacing();
        // The small slack keeps 3 sigma / h = 3.0 from rounding down.
        let radius = (3.0 * sigma / h + 1e-9).floor() as isize;
        let taps_count = (2 * radius + 1) as usize;
        if taps_count < 3 {
            return Err(Error::DegenerateKernel {
                sigma,
                taps: taps_count,
            });
        }
        let n = grid.n_side() as isize;
        let mut periodic = vec![0.0; n as usize];
        for k in -radius..=radius {
            let x = k as f64 * h;
            periodic[k.rem_euclid(n) as usize] += (-x * x / (2.0 * sigma * sigma)).exp();
        }
        let total: f64 = periodic.iter().sum();
        let taps = periodic
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 0.0)
            .map(|(k, w)| {
                let k = k as isize;
                let offset = if k > n / 2 { k - n } else { k };
                (offset, w / total)
            })
            .collect();
        Ok(Self { grid, sigma, taps })
    }

    pub fn identity(grid: Grid) -> Self {
        Self {
            grid,
            sigma: 0.0,
            taps: vec![(0, 1.0)],
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Kernel standard deviation in domain units (0 for the identity).
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Number of distinct kernel taps along one axis.
    pub fn support(&self) -> usize {
        self.taps.len()
    }

    /// Kernel as a length-`n_side` periodic vector indexed by offset mod n.
    pub fn kernel(&self) -> Vec<f64> {
        let n = self.grid.n_side() as isize;
        let mut k = vec![0.0; n as usize];
        for &(off, w) in &self.taps {
            k[off.rem_euclid(n) as usize] += w;
        }
        k
    }

    pub fn apply(&self, f: &Signal) -> Result<Vec<f64>> {
        f.ensure_grid(self.grid)?;
        let mut out = vec![0.0; f.values().len()];
        self.apply_into(f.values(), &mut out);
        Ok(out)
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.convolve(x, out, false)
    }

    pub fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        self.convolve(y, out, true)
    }

    fn convolve(&self, x: &[f64], out: &mut [f64], adjoint: bool) {
        let n = self.grid.len();
        assert_eq!(x.len(), n);
        assert_eq!(out.len(), n);
        let side = self.grid.n_side();
        let sign = if adjoint { -1 } else { 1 };
        match self.grid.dim() {
            1 => {
                out.fill(0.0);
                for &(off, w) in &self.taps {
                    shifted_axpy(w, x, (sign * off).rem_euclid(side as isize) as usize, out);
                }
            }
            _ => {
                // Rows: blur along the horizontal axis.
                let mut tmp = vec![0.0; n];
                for (src, dst) in x.chunks_exact(side).zip(tmp.chunks_exact_mut(side)) {
                    for &(off, w) in &self.taps {
                        shifted_axpy(w, src, (sign * off).rem_euclid(side as isize) as usize, dst);
                    }
                }
                // Columns: whole-row axpys with a row shift.
                out.fill(0.0);
                for r in 0..side {
                    let dst = &mut out[r * side..(r + 1) * side];
                    for &(off, w) in &self.taps {
                        let src_row = (r as isize - sign * off).rem_euclid(side as isize) as usize;
                        let src = &tmp[src_row * side..(src_row + 1) * side];
                        for (d, s) in dst.iter_mut().zip(src) {
                            *d += w * s;
                        }
                    }
                }
            }
        }
    }
}

/// `out[i] += w * x[(i - shift) mod n]`.
fn shifted_axpy(w: f64, x: &[f64], shift: usize, out: &mut [f64]) {
    let n = x.len();
    let (head, tail) = out.split_at_mut(shift);
    for (o, v) in tail.iter_mut().zip(&x[..n - shift]) {
        *o += w * v;
    }
    for (o, v) in head.iter_mut().zip(&x[n - shift..]) {
        *o += w * v;
    }
}

impl LinearOperator for ConvOperator {
    fn rows(&self) -> usize {
        self.grid.len()
    }

    fn cols(&self) -> usize {
        self.grid.len()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        self.apply_into(x, out)
    }

    fn apply_adjoint(&self, y: &[f64], out: &mut [f64]) {
        self.adjoint_into(y, out)
    }
}

/// Periodic forward differences, `D_1` in 1D and `[I (x) D_1; D_1 (x) I]` in 2D.
#[derive(Debug, Clone, Copy)]
pub struct GradOperator {
    grid: Grid,
}

impl GradOperator {
    pub fn new(grid: Grid) -> Self {
        Self { grid }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn output_len(&self) -> usize {
        self.grid.dim() * self.grid.len()
    }

    pub fn apply(&self, g: &Signal) -> Result<Vec<f64>> {
        g.ensure_grid(self.grid)?;
        let mut out = vec![0.0; self.output_len()];
        self.apply_into(g.values(), &mut out);
        Ok(out)
    }

    pub fn adjoint(&self, v: &[f64]) -> Result<Signal> {
        if v.len() != self.output_len() {
            return Err(Error::LengthMismatch {
                expected: self.output_len(),
                actual: v.len(),
            });
        }
        let mut out = vec![0.0; self.grid.len()];
        self.adjoint_into(v, &mut out);
        Signal::new(self.grid, out)
    }

    pub fn apply_into(&self, g: &[f64], out: &mut [f64]) {
        let n = self.grid.len();
        assert_eq!(g.len(), n);
        assert_eq!(out.len(), self.output_len());
        let side = self.grid.n_side();
        match self.grid.dim() {
            1 => diff_line(g, out),
            _ => {
                let (horiz, vert) = out.split_at_mut(n);
                for (src, dst) in g.chunks_exact(side).zip(horiz.chunks_exact_mut(side)) {
                    diff_line(src, dst);
                }
                for r in 0..side {
                    let next = (r + 1) % side;
                    for c in 0..side {
                        vert[r * side + c] = g[next * side + c] - g[r * side + c];
                    }
                }
            }
        }
    }

    pub fn adjoint_into(&self, v: &[f64], out: &mut [f64]) {
        let n = self.grid.len();
        assert_eq!(v.len(), self.output_len());
        assert_eq!(out.len(), n);
        let side = self.grid.n_side();
        match self.grid.dim() {
            1 => diff_line_adjoint(v, out),
            _ => {
                let (horiz, vert) = v.split_at(n);
                for (src, dst) in horiz.chunks_exact(side).zip(out.chunks_exact_mut(side)) {
                    diff_line_adjoint(src, dst);
                }
                for r in 0..side {
                    let prev = (r + side - 1) % side;
                    for c in 0..side {
                        out[r * side + c] += vert[prev * side + c] - vert[r * side + c];
                    }
                }
            }
        }
    }
}

fn diff_line(g: &[f64], out: &mut [f64]) {
    let n = g.len();
    for i in 0..n - 1 {
        out[i] = g[i + 1] - g[i];
    }
    out[n - 1] = g[0] - g[n - 1];
}

fn diff_line_adjoint(v: &[f64], out: &mut [f64]) {
    let n = v.len();
    out[0] = v[n - 1] - v[0];
    for i in 1..n {
        out[i] = v[i - 1] - v[i];
    }
}

impl LinearOperator for GradOperator {
    fn rows(&self) -> usize {
        self.output_len()
    }

    fn cols(&self) -> usize {
        self.grid.len()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        self.apply_into(x, out)
    }

    fn apply_adjoint(&self, y: &[f64], out: &mut [f64]) {
        self.adjoint_into(y, out)
    }
}
