//! Seeded synthetic ground truths `f = g + h` with a piecewise constant `g`
//! and a smooth `h`.
//!
//! Every component list may be given explicitly; missing lists are drawn from
//! the phantom seed on RNG stream 0. [`PhantomSpec::resolved`] returns the
//! spec with all lists filled in, which is what manifests record.

use besov_decomp::wavelet::{level_range, Dwt, WaveletBasis};
use besov_decomp::{Grid, RngHandle, Signal};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhantomKind {
    HaarDb8Combo,
    PiecewisePlusGaussianBumps,
    #[serde(rename = "blocks_2d")]
    Blocks2d,
}

/// One wavelet in a `haar_db8_combo` phantom. `height` is the amplitude in
/// function units; the coefficient is `height * sqrt(n / 2^level)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveletTerm {
    pub level: u32,
    pub shift: usize,
    pub height: f64,
}

/// The piecewise part steps by `height` at `at` (in `[0, 1)`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Jump {
    pub at: f64,
    pub height: f64,
}

/// Periodized Gaussian bump; `center` has one entry per dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    pub center: Vec<f64>,
    pub width: f64,
    pub amplitude: f64,
}

/// Axis-aligned block `[x0, x1) x [y0, y1)` with value `height`; `x` runs
/// along columns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Block {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomSpec {
    pub kind: PhantomKind,
    /// Defaults to the run seed.
    pub seed: Option<u64>,
    pub haar: Option<Vec<WaveletTerm>>,
    pub db8: Option<Vec<WaveletTerm>>,
    pub jumps: Option<Vec<Jump>>,
    pub bumps: Option<Vec<Bump>>,
    pub blocks: Option<Vec<Block>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    pub g: Signal,
    pub h: Signal,
    pub f: Signal,
}

fn uniform(rng: &mut RngHandle, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.uniform()
}

fn signed(rng: &mut RngHandle, lo: f64, hi: f64) -> f64 {
    let v = uniform(rng, lo, hi);
    if rng.random::<bool>() {
        v
    } else {
        -v
    }
}

fn random_terms(
    rng: &mut RngHandle,
    count: usize,
    levels: std::ops::RangeInclusive<u32>,
    height: (f64, f64),
) -> Vec<WaveletTerm> {
    (0..count)
        .map(|_| {
            let level = rng.random_range(levels.clone());
            WaveletTerm {
                level,
                shift: rng.random_range(0..1usize << level),
                height: signed(rng, height.0, height.1),
            }
        })
        .collect()
}

/// Ten cyclic levels in `[-1, 1]` with neighbours at least 0.5 apart, placed
/// at sorted breakpoints at least 8 cells apart. Grids under 80 cells get
/// one jump per 8 cells and proportionally smaller gaps.
fn random_jumps(rng: &mut RngHandle, n: usize) -> Vec<Jump> {
    let count = 10.min(n / 8).max(2);
    let min_gap = (n / (count * 3 / 2)).min(8) as f64 / n as f64;
    let at = loop {
        let mut at: Vec<f64> = (0..count).map(|_| (rng.random_range(0..n) as f64) / n as f64).collect();
        at.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let ok = (0..count).all(|k| {
            let next = if k + 1 < count { at[k + 1] } else { at[0] + 1.0 };
            next - at[k] >= min_gap
        });
        if ok {
            break at;
        }
    };
    let values = loop {
        let v: Vec<f64> = (0..count).map(|_| uniform(rng, -1.0, 1.0)).collect();
        if (0..count).all(|k| (v[k] - v[(k + count - 1) % count]).abs() >= 0.5) {
            break v;
        }
    };
    (0..count)
        .map(|k| Jump {
            at: at[k],
            height: values[k] - values[(k + count - 1) % count],
        })
        .collect()
}

fn random_bumps(rng: &mut RngHandle, dim: usize, count: usize, width: (f64, f64), amp: (f64, f64)) -> Vec<Bump> {
    (0..count)
        .map(|_| Bump {
            center: (0..dim).map(|_| rng.uniform()).collect(),
            width: uniform(rng, width.0, width.1),
            amplitude: uniform(rng, amp.0, amp.1),
        })
        .collect()
}

/// Four non-overlapping blocks with sides between 1/8 and 3/8, snapped to
/// the pixel grid and kept one pixel apart.
fn random_blocks(rng: &mut RngHandle, side: usize) -> Vec<Block> {
    let mut blocks: Vec<Block> = Vec::new();
    let snap = |v: f64| (v * side as f64).round() / side as f64;
    let gap = 2.0 / side as f64;
    while blocks.len() < 4 {
        let w = snap(uniform(rng, 0.125, 0.375));
        let h = snap(uniform(rng, 0.125, 0.375));
        let x0 = snap(uniform(rng, 0.05, 0.95 - w));
        let y0 = snap(uniform(rng, 0.05, 0.95 - h));
        let b = Block {
            x0,
            x1: x0 + w,
            y0,
            y1: y0 + h,
            height: uniform(rng, 0.5, 1.0),
        };
        let clear = blocks.iter().all(|o| {
            b.x0 >= o.x1 + gap || o.x0 >= b.x1 + gap || b.y0 >= o.y1 + gap || o.y0 >= b.y1 + gap
        });
        if clear {
            blocks.push(b);
        }
    }
    blocks
}

fn periodic_gauss(d: f64, width: f64) -> f64 {
    (-1..=1)
        .map(|k| {
            let x = d + k as f64;
            (-x * x / (2.0 * width * width)).exp()
        })
        .sum()
}

fn bump_field(grid: Grid, bumps: &[Bump]) -> Vec<f64> {
    let side = grid.n_side();
    (0..grid.len())
        .map(|i| {
            let pos: Vec<f64> = if grid.dim() == 1 {
                vec![i as f64 / side as f64]
            } else {
                vec![(i % side) as f64 / side as f64, (i / side) as f64 / side as f64]
            };
            bumps
                .iter()
                .map(|b| {
                    b.amplitude
                        * pos
                            .iter()
                            .zip(&b.center)
                            .map(|(p, c)| periodic_gauss(p - c, b.width))
                            .product::<f64>()
                })
                .sum()
        })
        .collect()
}

/// Root-mean-square amplitudes of randomly drawn combo components.
const COMBO_RMS_G: f64 = 0.6;
const COMBO_RMS_H: f64 = 0.8;

/// Scales the heights so the field has root-mean-square deviation `rms`
/// about its mean.
fn rescaled(grid: Grid, basis: WaveletBasis, mut terms: Vec<WaveletTerm>, rms: f64) -> CliResult<Vec<WaveletTerm>> {
    let field = wavelet_field(grid, basis, &terms)?;
    let n = field.len() as f64;
    let m = field.iter().sum::<f64>() / n;
    let sd = (field.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt();
    if sd > 0.0 {
        for t in &mut terms {
            t.height *= rms / sd;
        }
    }
    Ok(terms)
}

fn wavelet_field(grid: Grid, basis: WaveletBasis, terms: &[WaveletTerm]) -> CliResult<Vec<f64>> {
    let n = grid.len();
    let mut coeffs = vec![0.0; n];
    for t in terms {
        if t.level >= grid.levels() || t.shift >= 1usize << t.level {
            return Err(CliError::Phantom(format!(
                "wavelet term (level {}, shift {}) outside a {}-level grid",
                t.level,
                t.shift,
                grid.levels()
            )));
        }
        let idx = level_range(grid, t.level).start + t.shift;
        coeffs[idx] += t.height * (n as f64 / (1u64 << t.level) as f64).sqrt();
    }
    Ok(Dwt::new(basis, grid).inverse_vec(&coeffs))
}

fn check_dim(kind: PhantomKind, grid: Grid) -> CliResult<()> {
    let want = if kind == PhantomKind::Blocks2d { 2 } else { 1 };
    if grid.dim() != want {
        return Err(CliError::Phantom(format!(
            "{kind:?} needs a {want}D grid, got {}D",
            grid.dim()
        )));
    }
    Ok(())
}

fn forbid<T>(field: &Option<T>, name: &str, kind: PhantomKind) -> CliResult<()> {
    if field.is_some() {
        return Err(CliError::Phantom(format!("`{name}` is not used by {kind:?}")));
    }
    Ok(())
}

impl PhantomSpec {
    pub fn new(kind: PhantomKind) -> Self {
        Self {
            kind,
            seed: None,
            haar: None,
            db8: None,
            jumps: None,
            bumps: None,
            blocks: None,
        }
    }

    pub fn validate(&self, grid: Grid) -> CliResult<()> {
        check_dim(self.kind, grid)?;
        match self.kind {
            PhantomKind::HaarDb8Combo => {
                forbid(&self.jumps, "jumps", self.kind)?;
                forbid(&self.bumps, "bumps", self.kind)?;
                forbid(&self.blocks, "blocks", self.kind)?;
            }
            PhantomKind::PiecewisePlusGaussianBumps => {
                forbid(&self.haar, "haar", self.kind)?;
                forbid(&self.db8, "db8", self.kind)?;
                forbid(&self.blocks, "blocks", self.kind)?;
            }
            PhantomKind::Blocks2d => {
                forbid(&self.haar, "haar", self.kind)?;
                forbid(&self.db8, "db8", self.kind)?;
                forbid(&self.jumps, "jumps", self.kind)?;
            }
        }
        for j in self.jumps.iter().flatten() {
            if !(0.0..1.0).contains(&j.at) {
                return Err(CliError::Phantom(format!("jump location {} outside [0, 1)", j.at)));
            }
        }
        for b in self.bumps.iter().flatten() {
            if b.center.len() != grid.dim() || !(b.width > 0.0) {
                return Err(CliError::Phantom(format!("bad bump {b:?}")));
            }
        }
        for b in self.blocks.iter().flatten() {
            if !(0.0 <= b.x0 && b.x0 < b.x1 && b.x1 <= 1.0 && 0.0 <= b.y0 && b.y0 < b.y1 && b.y1 <= 1.0) {
                return Err(CliError::Phantom(format!("bad block {b:?}")));
            }
        }
        Ok(())
    }

    /// Copy with every component list filled in, drawing missing ones from
    /// `seed` (a seed set on the phantom itself takes precedence).
    pub fn resolved(&self, grid: Grid, seed: u64) -> CliResult<Self> {
        self.validate(grid)?;
        let seed = self.seed.unwrap_or(seed);
        let mut rng = RngHandle::new(seed, 0);
        let mut out = self.clone();
        out.seed = Some(seed);
        let n = grid.len();
        match self.kind {
            PhantomKind::HaarDb8Combo => {
                let top = grid.levels().saturating_sub(1);
                if out.haar.is_none() {
                    let terms = random_terms(&mut rng, 12, 3.min(top)..=7.min(top), (0.5, 1.0));
                    out.haar = Some(rescaled(grid, WaveletBasis::haar(), terms, COMBO_RMS_G)?);
                }
                if out.db8.is_none() {
                    let terms = random_terms(&mut rng, 12, 3.min(top)..=6.min(top), (0.5, 1.0));
                    out.db8 = Some(rescaled(grid, WaveletBasis::daubechies(8)?, terms, COMBO_RMS_H)?);
                }
            }
            PhantomKind::PiecewisePlusGaussianBumps => {
                if out.jumps.is_none() {
                    if n < 16 {
                        return Err(CliError::Phantom(format!("random jumps need at least 16 cells, got {n}")));
                    }
                    out.jumps = Some(random_jumps(&mut rng, n));
                }
                if out.bumps.is_none() {
                    out.bumps = Some(random_bumps(&mut rng, 1, 1, (0.1, 0.2), (1.0, 2.0)));
                }
            }
            PhantomKind::Blocks2d => {
                if out.blocks.is_none() {
                    if grid.n_side() < 16 {
                        return Err(CliError::Phantom(format!(
                            "random blocks need at least 16x16 pixels, got {0}x{0}",
                            grid.n_side()
                        )));
                    }
                    out.blocks = Some(random_blocks(&mut rng, grid.n_side()));
                }
                if out.bumps.is_none() {
                    out.bumps = Some(random_bumps(&mut rng, 2, 3, (0.08, 0.15), (0.3, 0.8)));
                }
            }
        }
        Ok(out)
    }

    /// Builds the components on `grid`, resolving missing lists from `seed`.
    /// `g` is shifted to zero mean, with the offset moved into `h`.
    pub fn generate(&self, grid: Grid, seed: u64) -> CliResult<Phantom> {
        let spec = self.resolved(grid, seed)?;
        let n = grid.len();
        let side = grid.n_side();
        let (mut g, mut h) = match spec.kind {
            PhantomKind::HaarDb8Combo => (
                wavelet_field(grid, WaveletBasis::haar(), spec.haar.as_deref().unwrap_or(&[]))?,
                wavelet_field(
                    grid,
                    WaveletBasis::daubechies(8)?,
                    spec.db8.as_deref().unwrap_or(&[]),
                )?,
            ),
            PhantomKind::PiecewisePlusGaussianBumps => {
                let jumps = spec.jumps.as_deref().unwrap_or(&[]);
                let g = (0..n)
                    .map(|i| {
                        let x = i as f64 / n as f64;
                        jumps.iter().filter(|j| j.at <= x).map(|j| j.height).sum()
                    })
                    .collect();
                (g, bump_field(grid, spec.bumps.as_deref().unwrap_or(&[])))
            }
            PhantomKind::Blocks2d => {
                let blocks = spec.blocks.as_deref().unwrap_or(&[]);
                let g: Vec<f64> = (0..n)
                    .map(|i| {
                        let x = (i % side) as f64 / side as f64;
                        let y = (i / side) as f64 / side as f64;
                        blocks
                            .iter()
                            .filter(|b| b.x0 <= x && x < b.x1 && b.y0 <= y && y < b.y1)
                            .map(|b| b.height)
                            .sum()
                    })
                    .collect();
                let mut h = bump_field(grid, spec.bumps.as_deref().unwrap_or(&[]));
                // Map the sum onto [0, 2].
                let f: Vec<f64> = g.iter().zip(&h).map(|(a, b)| a + b).collect();
                let lo = f.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if !(hi > lo) {
                    return Err(CliError::Phantom("blocks phantom is constant".into()));
                }
                let scale = 2.0 / (hi - lo);
                let g: Vec<f64> = g.iter().map(|v| v * scale).collect();
                h.iter_mut().for_each(|v| *v = (*v - lo) * scale);
                (g, h)
            }
        };
        let mean = g.iter().sum::<f64>() / n as f64;
        g.iter_mut().for_each(|v| *v -= mean);
        h.iter_mut().for_each(|v| *v += mean);
        let f: Vec<f64> = g.iter().zip(&h).map(|(a, b)| a + b).collect();
        Ok(Phantom {
            g: Signal::new(grid, g)?,
            h: Signal::new(grid, h)?,
            f: Signal::new(grid, f)?,
        })
    }
}
