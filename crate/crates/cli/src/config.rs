//! Experiment configuration, parsed strictly from TOML.
//!
//! Model and sampler parameters have no defaults. Only the NUTS tuning
//! constants and the output options fall back to standard values, and the
//! resolved form written to manifests spells those out too.

use std::path::{Path, PathBuf};

use besov_decomp::linalg::CglsOptions;
use besov_decomp::priors::{BesovParams, BesovPrior};
use besov_decomp::samplers::{GaussianBesovHyper, NutsConfig, TwoBesovHyper};
use besov_decomp::wavelet::WaveletBasis;
use besov_decomp::Grid;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::phantom::PhantomSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    TwoBesovNuts,
    HierTwoBesov,
    HierGaussianBesov,
    SingleBesovNuts,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::TwoBesovNuts => "two_besov_nuts",
            Self::HierTwoBesov => "hier_two_besov",
            Self::HierGaussianBesov => "hier_gaussian_besov",
            Self::SingleBesovNuts => "single_besov_nuts",
        }
    }

    pub fn is_gibbs(self) -> bool {
        matches!(self, Self::HierTwoBesov | Self::HierGaussianBesov)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub dim: usize,
    pub levels: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataBlock {
    /// Kernel standard deviation on the unit interval (one pixel is `2^-levels`).
    pub kernel_sigma: f64,
    /// Expected `||noise|| / ||A f||`.
    pub noise_level: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BesovBlock {
    /// Daubechies order; 1 is Haar.
    pub wavelet: usize,
    pub s: f64,
    pub p: f64,
    /// Fixed strength; must be absent when it is sampled.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<BesovBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<BesovBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<BesovBlock>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b2: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CglsBlock {
    pub tol: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NutsBlock {
    pub max_depth: usize,
    pub target_accept: f64,
    pub gamma: f64,
    pub t0: f64,
    pub kappa: f64,
    pub delta_max: f64,
}

impl Default for NutsBlock {
    fn default() -> Self {
        let d = NutsConfig::default();
        Self {
            max_depth: d.max_depth,
            target_accept: d.target_accept,
            gamma: d.gamma,
            t0: d.t0,
            kappa: d.kappa,
            delta_max: d.delta_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerBlock {
    pub n_samples: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cgls: Option<CglsBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nuts: Option<NutsBlock>,
    /// Gibbs only; default true.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recenter: Option<bool>,
    /// Gibbs only; default true.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warm_start: Option<bool>,
    /// Hierarchical Gaussian only; default true.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub store_lambda_diag: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default = "default_level")]
    pub credible_level: f64,
    /// Representative coordinate for ACF output; defaults to the grid midpoint.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acf_coordinate: Option<usize>,
    #[serde(default = "default_max_lag")]
    pub acf_max_lag: usize,
    #[serde(default = "default_true")]
    pub write_chains: bool,
}

fn default_level() -> f64 {
    0.95
}

fn default_max_lag() -> usize {
    200
}

fn default_true() -> bool {
    true
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self {
            dir: None,
            credible_level: default_level(),
            acf_coordinate: None,
            acf_max_lag: default_max_lag(),
            write_chains: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub grid: GridBlock,
    pub data: DataBlock,
    pub phantom: PhantomSpec,
    #[serde(default)]
    pub prior: PriorBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyper: Option<HyperBlock>,
    pub sampler: SamplerBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

/// Validated model pieces ready for the samplers.
#[derive(Debug, Clone)]
pub enum Model {
    TwoBesovNuts { g: BesovPrior, h: BesovPrior, nuts: NutsConfig },
    SingleBesovNuts { f: BesovPrior, nuts: NutsConfig },
    HierTwoBesov { g: BesovPrior, h: BesovPrior, hyper: TwoBesovHyper },
    HierGaussianBesov { h: BesovPrior, hyper: GaussianBesovHyper },
}

fn err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn need<T: Copy>(v: Option<T>, what: &str, kind: ExperimentKind) -> CliResult<T> {
    v.ok_or_else(|| err(format!("{} requires `{what}`", kind.name())))
}

fn forbid<T>(v: &Option<T>, what: &str, kind: ExperimentKind) -> CliResult<()> {
    if v.is_some() {
        return Err(err(format!("`{what}` is not used by {}", kind.name())));
    }
    Ok(())
}

fn besov(block: BesovBlock, lambda: f64, grid: Grid) -> CliResult<BesovPrior> {
    let basis = WaveletBasis::daubechies(block.wavelet)?;
    Ok(BesovPrior::new(BesovParams::new(block.s, block.p, lambda, basis, grid)?)?)
}

/// Prior with a fixed strength, as the NUTS kinds need.
fn fixed(block: Option<BesovBlock>, name: &str, kind: ExperimentKind, grid: Grid) -> CliResult<BesovPrior> {
    let b = need(block, &format!("prior.{name}"), kind)?;
    let lambda = need(b.lambda, &format!("prior.{name}.lambda"), kind)?;
    besov(b, lambda, grid)
}

/// Gaussian prior whose strength is sampled; the stored strength is a unit
/// placeholder.
fn sampled(block: Option<BesovBlock>, name: &str, kind: ExperimentKind, grid: Grid) -> CliResult<BesovPrior> {
    let b = need(block, &format!("prior.{name}"), kind)?;
    forbid(&b.lambda, &format!("prior.{name}.lambda"), kind)?;
    if b.p != 2.0 {
        return Err(err(format!(
            "{} samples with a Gaussian prior; prior.{name}.p must be 2, got {}",
            kind.name(),
            b.p
        )));
    }
    besov(b, 1.0, grid)
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, String> {
        let value: toml::Table = toml::from_str(text).map_err(|e| e.to_string())?;
        // A manifest carries the resolved config under [config].
        let table = if value.contains_key("run") && value.contains_key("config") {
            match value.get("config") {
                Some(toml::Value::Table(t)) => t.clone(),
                _ => return Err("manifest `config` is not a table".into()),
            }
        } else {
            value
        };
        table.try_into().map_err(|e: toml::de::Error| e.to_string())
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let cfg = Self::from_toml_str(&text).map_err(|m| CliError::parse(path, m))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn grid(&self) -> CliResult<Grid> {
        Ok(Grid::new(self.grid.dim, self.grid.levels)?)
    }

    pub fn cgls(&self) -> CliResult<CglsOptions> {
        let c = need(self.sampler.cgls, "sampler.cgls", self.kind)?;
        Ok(CglsOptions {
            tol: c.tol,
            max_iter: c.max_iter,
            check_adjoint: false,
        })
    }

    fn nuts(&self) -> NutsConfig {
        let b = self.sampler.nuts.unwrap_or_default();
        NutsConfig {
            max_depth: b.max_depth,
            target_accept: b.target_accept,
            gamma: b.gamma,
            t0: b.t0,
            kappa: b.kappa,
            delta_max: b.delta_max,
            thin: self.sampler.thin,
        }
    }

    /// Checks that exactly the blocks the kind uses are present and builds
    /// the priors.
    pub fn model(&self) -> CliResult<Model> {
        let kind = self.kind;
        let grid = self.grid()?;
        let pr = &self.prior;
        let hy = self.hyper.unwrap_or_default();
        let gibbs = kind.is_gibbs();
        if gibbs {
            forbid(&self.sampler.nuts, "sampler.nuts", kind)?;
            let c = self.cgls()?;
            if !(c.tol > 0.0) || c.max_iter == 0 {
                return Err(err("sampler.cgls needs tol > 0 and max_iter > 0"));
            }
        } else {
            forbid(&self.sampler.cgls, "sampler.cgls", kind)?;
            forbid(&self.sampler.recenter, "sampler.recenter", kind)?;
            forbid(&self.sampler.warm_start, "sampler.warm_start", kind)?;
            forbid(&self.hyper, "hyper", kind)?;
        }
        if kind != ExperimentKind::HierGaussianBesov {
            forbid(&self.sampler.store_lambda_diag, "sampler.store_lambda_diag", kind)?;
        }
        let gauss_keys = [hy.alpha1, hy.beta1, hy.alpha2, hy.beta2];
        let besov_keys = [hy.a1, hy.b1, hy.a2, hy.b2];
        Ok(match kind {
            ExperimentKind::TwoBesovNuts => {
                forbid(&pr.f, "prior.f", kind)?;
                Model::TwoBesovNuts {
                    g: fixed(pr.g, "g", kind, grid)?,
                    h: fixed(pr.h, "h", kind, grid)?,
                    nuts: self.nuts(),
                }
            }
            ExperimentKind::SingleBesovNuts => {
                forbid(&pr.g, "prior.g", kind)?;
                forbid(&pr.h, "prior.h", kind)?;
                Model::SingleBesovNuts {
                    f: fixed(pr.f, "f", kind, grid)?,
                    nuts: self.nuts(),
                }
            }
            ExperimentKind::HierTwoBesov => {
                forbid(&pr.f, "prior.f", kind)?;
                if gauss_keys.iter().any(Option::is_some) {
                    return Err(err("hier_two_besov takes hyper.a1, b1, a2, b2 only"));
                }
                Model::HierTwoBesov {
                    g: sampled(pr.g, "g", kind, grid)?,
                    h: sampled(pr.h, "h", kind, grid)?,
                    hyper: TwoBesovHyper {
                        a1: need(hy.a1, "hyper.a1", kind)?,
                        b1: need(hy.b1, "hyper.b1", kind)?,
                        a2: need(hy.a2, "hyper.a2", kind)?,
                        b2: need(hy.b2, "hyper.b2", kind)?,
                    },
                }
            }
            ExperimentKind::HierGaussianBesov => {
                forbid(&pr.f, "prior.f", kind)?;
                forbid(&pr.g, "prior.g", kind)?;
                if besov_keys.iter().any(Option::is_some) {
                    return Err(err("hier_gaussian_besov takes hyper.alpha1, beta1, alpha2, beta2 only"));
                }
                Model::HierGaussianBesov {
                    h: sampled(pr.h, "h", kind, grid)?,
                    hyper: GaussianBesovHyper {
                        alpha1: need(hy.alpha1, "hyper.alpha1", kind)?,
                        beta1: need(hy.beta1, "hyper.beta1", kind)?,
                        alpha2: need(hy.alpha2, "hyper.alpha2", kind)?,
                        beta2: need(hy.beta2, "hyper.beta2", kind)?,
                    },
                }
            }
        })
    }

    pub fn validate(&self) -> CliResult<()> {
        let grid = self.grid()?;
        if !(self.data.kernel_sigma > 0.0) || !(self.data.noise_level > 0.0) {
            return Err(err("data.kernel_sigma and data.noise_level must be positive"));
        }
        let s = &self.sampler;
        if s.burn_in >= s.n_samples || s.thin == 0 {
            return Err(err(format!(
                "need burn_in < n_samples and thin >= 1, got {} / {} / {}",
                s.burn_in, s.n_samples, s.thin
            )));
        }
        let o = &self.output;
        if !(o.credible_level > 0.0 && o.credible_level < 1.0) {
            return Err(err("output.credible_level must lie in (0, 1)"));
        }
        if let Some(c) = o.acf_coordinate {
            if c >= grid.len() {
                return Err(err(format!("output.acf_coordinate {c} is off the grid")));
            }
        }
        self.phantom.validate(grid)?;
        self.model()?;
        Ok(())
    }

    pub fn acf_coordinate(&self) -> CliResult<usize> {
        let grid = self.grid()?;
        Ok(self.output.acf_coordinate.unwrap_or_else(|| midpoint(grid)))
    }

    /// The config as actually run: effective seed, phantom lists, NUTS
    /// constants, Gibbs switches and ACF coordinate all made explicit.
    pub fn resolved(&self, seed: u64) -> CliResult<Self> {
        let mut out = self.clone();
        let grid = self.grid()?;
        out.sampler.seed = seed;
        out.phantom = self.phantom.resolved(grid, seed)?;
        if self.kind.is_gibbs() {
            out.sampler.recenter.get_or_insert(true);
            out.sampler.warm_start.get_or_insert(true);
        } else {
            out.sampler.nuts.get_or_insert_with(NutsBlock::default);
        }
        if self.kind == ExperimentKind::HierGaussianBesov {
            out.sampler.store_lambda_diag.get_or_insert(true);
        }
        out.output.acf_coordinate = Some(self.acf_coordinate()?);
        out.output.dir = None;
        Ok(out)
    }
}

/// Centre cell: `n / 2` in 1D, `(side / 2, side / 2)` in 2D.
pub fn midpoint(grid: Grid) -> usize {
    let side = grid.n_side();
    if grid.dim() == 1 {
        side / 2
    } else {
        (side / 2) * side + side / 2
    }
}
