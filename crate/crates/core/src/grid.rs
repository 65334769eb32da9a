use crate::error::{Error, Result};

/// Uniform periodic grid on the unit torus `[0,1)^d` with `2^levels` points
/// per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Grid {
    dim: usize,
    levels: u32,
}

impl Grid {
    pub const MAX_LEVELS: u32 = 16;

    pub fn new(dim: usize, levels: u32) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if !(1..=Self::MAX_LEVELS).contains(&levels) {
            return Err(Error::LevelsOutOfRange(levels));
        }
        Ok(Self { dim, levels })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Truncation level `J`.
    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn n_side(&self) -> usize {
        1usize << self.levels
    }

    /// Total number of grid points, `n_side^d`.
    pub fn len(&self) -> usize {
        self.n_side().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n_side() as f64
    }

    /// Grid point coordinate along one axis.
    pub fn coord(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }
}

/// Real signal sampled on a [`Grid`]; 2D values are row-major
/// (`values[row * n_side + col]`, rows index the vertical axis).
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    grid: Grid,
    values: Vec<f64>,
}

impl Signal {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("signal values"));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn norm(&self) -> f64 {
        norm2(&self.values)
    }

    pub fn ensure_grid(&self, grid: Grid) -> Result<()> {
        if self.grid != grid {
            return Err(Error::GridMismatch(format!(
                "signal on {:?}, expected {:?}",
                self.grid, grid
            )));
        }
        Ok(())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
