//! Data simulation and sampler dispatch for one experiment.

use std::path::{Path, PathBuf};
use std::time::Instant;

use besov_decomp::operators::ConvOperator;
use besov_decomp::samplers::{
    gibbs_gaussian_besov, gibbs_two_besov, nuts_sample, ChainMeta, ChainStore, GibbsConfig,
    SampleMatrix, SingleBesovPosterior, TwoBesovPosterior,
};
use besov_decomp::{add_noise, DecompProblem, Error as CoreError, RngHandle};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Model};
use crate::error::{CliError, CliResult};
use crate::io;
use crate::manifest::{Manifest, RunInfo, Status};
use crate::phantom::Phantom;
use crate::report::{self, ChainVars, Summary, Truth};

pub const PHANTOM_STREAM: u64 = 0;
pub const NOISE_STREAM: u64 = 1;
/// Chain `k` draws from stream `CHAIN_STREAM_BASE + k`.
pub const CHAIN_STREAM_BASE: u64 = 100;

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    /// Overrides `sampler.seed`.
    pub seed: Option<u64>,
    pub chains: usize,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub dir: PathBuf,
    pub summary: Summary,
    pub wall_time_secs: f64,
}

/// Ground truth plus the noisy blurred data it produced.
#[derive(Debug, Clone)]
pub struct Simulated {
    pub phantom: Phantom,
    pub problem: DecompProblem,
    /// `gaussian`, or `identity` after a degenerate-kernel fallback.
    pub forward: &'static str,
}

/// Phantom on stream 0, Gaussian blur and relative noise on stream 1. Expects
/// a resolved config.
pub fn simulate(cfg: &ExperimentConfig) -> CliResult<Simulated> {
    let grid = cfg.grid()?;
    let seed = cfg.sampler.seed;
    let phantom = cfg.phantom.generate(grid, seed)?;
    let (op, forward) = match ConvOperator::gaussian(grid, cfg.data.kernel_sigma) {
        Ok(op) => (op, "gaussian"),
        Err(CoreError::DegenerateKernel { sigma, taps }) => {
            log::warn!(
                "kernel sigma {sigma} spans {taps} tap(s) on a grid with spacing {}; using the identity",
                grid.spacing()
            );
            (ConvOperator::identity(grid), "identity")
        }
        Err(e) => return Err(e.into()),
    };
    let clean = op.apply(&phantom.f)?;
    let (y, sigma) = add_noise(&clean, cfg.data.noise_level, &mut RngHandle::new(seed, NOISE_STREAM))?;
    let problem = DecompProblem::new(op, sigma, y)?.with_truth(phantom.f.clone())?;
    Ok(Simulated {
        phantom,
        problem,
        forward,
    })
}

/// Per-chain record kept in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainInfo {
    pub index: usize,
    pub stream: u64,
    pub wall_time_secs: f64,
    pub kept: usize,
    pub divergences: usize,
    pub cgls_nonconverged: usize,
    pub cgls_iterations: u64,
    pub cgls_solves: u64,
    pub grad_evals: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_size: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_accept: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_tree_depth: Option<f64>,
}

impl ChainInfo {
    fn new(index: usize, kept: usize, m: &ChainMeta) -> Self {
        Self {
            index,
            stream: m.stream_id,
            wall_time_secs: m.wall_time_secs,
            kept,
            divergences: m.divergences,
            cgls_nonconverged: m.cgls_nonconverged,
            cgls_iterations: m.cgls_iterations,
            cgls_solves: m.cgls_solves,
            grad_evals: m.grad_evals,
            step_size: m.step_size,
            mean_accept: m.mean_accept,
            mean_tree_depth: m.mean_tree_depth,
        }
    }
}

fn split_stacked(x: &SampleMatrix, n: usize) -> ChainVars {
    let mut g = SampleMatrix::with_capacity(n, x.rows());
    let mut h = SampleMatrix::with_capacity(n, x.rows());
    let mut f = SampleMatrix::with_capacity(n, x.rows());
    let mut sum = vec![0.0; n];
    for row in x.iter_rows() {
        let (a, b) = row.split_at(n);
        g.push(a);
        h.push(b);
        for ((s, u), v) in sum.iter_mut().zip(a).zip(b) {
            *s = u + v;
        }
        f.push(&sum);
    }
    ChainVars::from_pairs(vec![("g".into(), g), ("h".into(), h), ("f".into(), f)])
}

/// Runs one chain of the configured sampler on `problem`.
pub fn run_chain(
    cfg: &ExperimentConfig,
    model: &Model,
    problem: &DecompProblem,
    rng: &mut RngHandle,
) -> CliResult<(ChainVars, ChainMeta)> {
    let s = &cfg.sampler;
    let n = problem.grid().len();
    let gibbs = || -> CliResult<GibbsConfig> {
        let mut c = GibbsConfig::new(s.n_samples, s.burn_in, s.thin);
        c.cgls = cfg.cgls()?;
        c.recenter = s.recenter.unwrap_or(true);
        c.warm_start = s.warm_start.unwrap_or(true);
        c.store_lambda_diag = s.store_lambda_diag.unwrap_or(true);
        Ok(c)
    };
    let from_store = |store: ChainStore| (ChainVars::from_store(store.variables), store.meta);
    Ok(match model {
        Model::TwoBesovNuts { g, h, nuts } => {
            let post = TwoBesovPosterior::new(problem.clone(), g.clone(), h.clone())?;
            let store = nuts_sample(&post, &vec![0.0; 2 * n], s.n_samples, s.burn_in, nuts, rng)?;
            let x = store.get("x").expect("NUTS stores x");
            (split_stacked(x, n), store.meta)
        }
        Model::SingleBesovNuts { f, nuts } => {
            let post = SingleBesovPosterior::new(problem.clone(), f.clone())?;
            let mut store = nuts_sample(&post, &vec![0.0; n], s.n_samples, s.burn_in, nuts, rng)?;
            let x = store.variables.remove("x").expect("NUTS stores x");
            (ChainVars::from_pairs(vec![("f".into(), x)]), store.meta)
        }
        Model::HierTwoBesov { g, h, hyper } => {
            from_store(gibbs_two_besov(problem, g, h, hyper, &gibbs()?, rng)?)
        }
        Model::HierGaussianBesov { h, hyper } => {
            from_store(gibbs_gaussian_besov(problem, h, hyper, &gibbs()?, rng)?)
        }
    })
}

fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn chain_dir(out: &Path, k: usize) -> PathBuf {
    out.join(format!("chain_{k}"))
}

/// Writes `truth_{g,h,f}.txt` and `data.txt`.
pub fn write_simulation(dir: &Path, sim: &Simulated) -> CliResult<()> {
    let grid = sim.problem.grid();
    io::write_signal(&dir.join("truth_g.txt"), grid, sim.phantom.g.values())?;
    io::write_signal(&dir.join("truth_h.txt"), grid, sim.phantom.h.values())?;
    io::write_signal(&dir.join("truth_f.txt"), grid, sim.phantom.f.values())?;
    io::write_signal(&dir.join("data.txt"), grid, sim.problem.data())
}

fn run_info(status: Status, seed: u64, chains: usize, sim: &Simulated) -> RunInfo {
    RunInfo {
        status,
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        chains,
        forward: sim.forward.to_string(),
        noise_sigma: sim.problem.noise_sigma(),
        error: None,
    }
}

/// Runs the experiment end to end and fills `opts.out`. The manifest is
/// written first with status `incomplete` and only marked `complete` once
/// every output exists; a failure leaves it `failed` with the message.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> CliResult<RunReport> {
    if opts.chains == 0 {
        return Err(CliError::Config("--chains must be at least 1".into()));
    }
    cfg.validate()?;
    let seed = opts.seed.unwrap_or(cfg.sampler.seed);
    let resolved = cfg.resolved(seed)?;
    let model = resolved.model()?;
    let dir = opts.out.clone();
    create_dir(&dir)?;
    let sim = simulate(&resolved)?;
    let mut manifest = Manifest {
        run: run_info(Status::Incomplete, seed, opts.chains, &sim),
        chain: Vec::new(),
        config: resolved,
    };
    manifest.write(&dir)?;
    let start = Instant::now();
    match execute(&mut manifest, &model, &sim, &dir) {
        Ok(summary) => {
            manifest.run.status = Status::Complete;
            manifest.write(&dir)?;
            Ok(RunReport {
                dir,
                summary,
                wall_time_secs: start.elapsed().as_secs_f64(),
            })
        }
        Err(e) => {
            manifest.run.status = Status::Failed;
            manifest.run.error = Some(e.to_string());
            // The original error matters more than a failed status update.
            let _ = manifest.write(&dir);
            Err(e)
        }
    }
}

fn execute(manifest: &mut Manifest, model: &Model, sim: &Simulated, dir: &Path) -> CliResult<Summary> {
    let cfg = &manifest.config;
    write_simulation(dir, sim)?;
    let seed = manifest.run.seed;
    let k = manifest.run.chains;
    log::info!("{}: {} chain(s), seed {seed}", cfg.kind.name(), k);
    let results: Vec<CliResult<(ChainVars, ChainMeta)>> = if k == 1 {
        let mut rng = RngHandle::new(seed, CHAIN_STREAM_BASE);
        vec![run_chain(cfg, model, &sim.problem, &mut rng)]
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..k)
                .map(|i| {
                    scope.spawn(move || {
                        let mut rng = RngHandle::new(seed, CHAIN_STREAM_BASE + i as u64);
                        run_chain(cfg, model, &sim.problem, &mut rng)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("chain thread panicked"))
                .collect()
        })
    };
    let mut chains = Vec::with_capacity(k);
    let mut infos = Vec::with_capacity(k);
    for (i, r) in results.into_iter().enumerate() {
        let (vars, meta) = r?;
        log::info!("chain {i}: {} draws in {:.1} s", vars.rows(), meta.wall_time_secs);
        infos.push(ChainInfo::new(i, vars.rows(), &meta));
        chains.push(vars);
    }
    if cfg.output.write_chains {
        for (i, vars) in chains.iter().enumerate() {
            let cdir = chain_dir(dir, i);
            create_dir(&cdir)?;
            vars.write(&cdir)?;
        }
    }
    manifest.chain = infos;
    manifest.write(dir)?;
    let truth = Truth::from_phantom(&sim.phantom);
    report::write_reports(dir, manifest, &chains, &truth)
}

/// The `phantom` verb: truth and data plus a manifest with status
/// `phantom`, no sampling.
pub fn write_phantom(cfg: &ExperimentConfig, out: &Path, seed: Option<u64>) -> CliResult<Simulated> {
    cfg.validate()?;
    let seed = seed.unwrap_or(cfg.sampler.seed);
    let resolved = cfg.resolved(seed)?;
    create_dir(out)?;
    let sim = simulate(&resolved)?;
    write_simulation(out, &sim)?;
    Manifest {
        run: run_info(Status::Phantom, seed, 0, &sim),
        chain: Vec::new(),
        config: resolved,
    }
    .write(out)?;
    Ok(sim)
}
