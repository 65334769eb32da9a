//! Posterior summaries written next to the chains, and their recomputation
//! from stored chain files.
//!
//! Layout of a run directory:
//!
//! ```text
//! manifest.toml                    config as run, seed, per-chain counters
//! truth_{g,h,f}.txt, data.txt      signals (one value per line, or image rows)
//! mean_<v>.txt, ci_width_<v>.txt   pooled posterior mean and CI width of g, h, f
//! summary.csv, summary.txt         relative errors and ESS spreads
//! chain_<k>/<v>.csv                draws, one row per kept iteration
//! chain_<k>/stats_<v>.csv          per-coordinate mean, std, CI, ESS
//! chain_<k>/hyper.csv              the same for scalar hyperparameters
//! chain_<k>/acf.csv                ACF at the representative coordinate
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use besov_decomp::diagnostics::{credible_interval, relative_error, spread, ChainStats};
use besov_decomp::samplers::SampleMatrix;
use besov_decomp::{Grid, Signal};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{CliError, CliResult};
use crate::io::{self, num};
use crate::manifest::{Manifest, Status};
use crate::phantom::Phantom;
use crate::run::chain_dir;

/// Canonical output order of the sampled variables.
pub const VARIABLE_ORDER: [&str; 6] = ["g", "h", "f", "lambda_diag", "lambda_g", "lambda_h"];

pub fn is_scalar(name: &str) -> bool {
    matches!(name, "lambda_g" | "lambda_h")
}

fn rank(name: &str) -> usize {
    VARIABLE_ORDER.iter().position(|v| *v == name).unwrap_or(VARIABLE_ORDER.len())
}

/// Variables a config produces, in canonical order.
pub fn variables(cfg: &ExperimentConfig) -> Vec<&'static str> {
    match cfg.kind {
        ExperimentKind::TwoBesovNuts => vec!["g", "h", "f"],
        ExperimentKind::SingleBesovNuts => vec!["f"],
        ExperimentKind::HierTwoBesov => vec!["g", "h", "f", "lambda_g", "lambda_h"],
        ExperimentKind::HierGaussianBesov => {
            if cfg.sampler.store_lambda_diag.unwrap_or(true) {
                vec!["g", "h", "f", "lambda_diag", "lambda_h"]
            } else {
                vec!["g", "h", "f", "lambda_h"]
            }
        }
    }
}

/// The draws of one chain, by variable name in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainVars {
    vars: Vec<(String, SampleMatrix)>,
}

impl ChainVars {
    pub fn from_pairs(mut vars: Vec<(String, SampleMatrix)>) -> Self {
        vars.sort_by(|a, b| rank(&a.0).cmp(&rank(&b.0)).then_with(|| a.0.cmp(&b.0)));
        Self { vars }
    }

    pub fn from_store(store: BTreeMap<String, SampleMatrix>) -> Self {
        Self::from_pairs(store.into_iter().collect())
    }

    pub fn get(&self, name: &str) -> Option<&SampleMatrix> {
        self.vars.iter().find(|(n, _)| n == name).map(|(_, m)| m)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &SampleMatrix)> {
        self.vars.iter().map(|(n, m)| (n.as_str(), m))
    }

    pub fn rows(&self) -> usize {
        self.vars.first().map_or(0, |(_, m)| m.rows())
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        for (name, m) in self.iter() {
            io::write_chain(&dir.join(format!("{name}.csv")), name, m)?;
        }
        Ok(())
    }

    pub fn read(dir: &Path, names: &[&str]) -> CliResult<Self> {
        let mut vars = Vec::with_capacity(names.len());
        for name in names {
            vars.push((name.to_string(), io::read_chain(&dir.join(format!("{name}.csv")))?));
        }
        Ok(Self::from_pairs(vars))
    }
}

#[derive(Debug, Clone)]
pub struct Truth {
    pub g: Signal,
    pub h: Signal,
    pub f: Signal,
}

impl Truth {
    pub fn from_phantom(p: &Phantom) -> Self {
        Self {
            g: p.g.clone(),
            h: p.h.clone(),
            f: p.f.clone(),
        }
    }

    pub fn read(dir: &Path, grid: Grid) -> CliResult<Self> {
        let load = |name: &str| -> CliResult<Signal> {
            let path = dir.join(format!("truth_{name}.txt"));
            let v = io::read_signal(&path, grid)?;
            Signal::new(grid, v).map_err(|e| CliError::parse(&path, e))
        };
        Ok(Self {
            g: load("g")?,
            h: load("h")?,
            f: load("f")?,
        })
    }

    fn get(&self, name: &str) -> Option<&Signal> {
        match name {
            "g" => Some(&self.g),
            "h" => Some(&self.h),
            "f" => Some(&self.f),
            _ => None,
        }
    }
}

/// Ordered `metric,value` rows of `summary.csv`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    pub rows: Vec<(String, String)>,
}

impl Summary {
    fn push(&mut self, k: impl Into<String>, v: impl Into<String>) {
        self.rows.push((k.into(), v.into()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.rows.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key).and_then(|v| v.parse().ok())
    }

    pub fn read(dir: &Path) -> CliResult<Self> {
        Ok(Self {
            rows: io::read_pairs(&dir.join("summary.csv"))?,
        })
    }
}

const STATS_HEADER: [&str; 8] = ["index", "mean", "std", "ci_lower", "ci_upper", "ci_width", "ess", "degenerate"];

fn stats_row(label: String, s: &ChainStats, j: usize) -> Vec<String> {
    vec![
        label,
        num(s.mean[j]),
        num(s.std[j]),
        num(s.ci.lower[j]),
        num(s.ci.upper[j]),
        num(s.ci.width[j]),
        num(s.ess[j]),
        s.degenerate[j].to_string(),
    ]
}

fn concat(chains: &[ChainVars], name: &str) -> Option<SampleMatrix> {
    let first = chains.first()?.get(name)?;
    let mut data = Vec::with_capacity(first.as_slice().len() * chains.len());
    for c in chains {
        data.extend_from_slice(c.get(name)?.as_slice());
    }
    Some(SampleMatrix::from_rows(first.cols(), data))
}

/// Writes every stats file and both summaries for `chains`, returning the
/// summary. Depends only on the manifest, the draws and the truth, so running
/// it on reloaded chains reproduces the files byte for byte.
pub fn write_reports(
    dir: &Path,
    manifest: &Manifest,
    chains: &[ChainVars],
    truth: &Truth,
) -> CliResult<Summary> {
    let cfg = &manifest.config;
    let out = &cfg.output;
    let coord = cfg.acf_coordinate()?;
    let grid = cfg.grid()?;
    let names: Vec<String> = chains
        .first()
        .map(|c| c.iter().map(|(n, _)| n.to_string()).collect())
        .unwrap_or_default();

    let mut vector_ess: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut scalar_ess: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (k, vars) in chains.iter().enumerate() {
        let cdir = chain_dir(dir, k);
        std::fs::create_dir_all(&cdir).map_err(|e| CliError::io(&cdir, e))?;
        let mut hyper_rows = Vec::new();
        let mut acf_cols: Vec<(&str, Vec<f64>)> = Vec::new();
        for (name, m) in vars.iter() {
            let c = if is_scalar(name) { 0 } else { coord };
            let stats = ChainStats::compute(m, out.credible_level, &[c], out.acf_max_lag)?;
            acf_cols.push((name, stats.acf[0].1.clone()));
            if is_scalar(name) {
                hyper_rows.push(stats_row(name.to_string(), &stats, 0));
                scalar_ess.entry(name).or_default().push(stats.ess[0]);
            } else {
                let rows: Vec<Vec<String>> = (0..m.cols()).map(|j| stats_row(j.to_string(), &stats, j)).collect();
                io::write_table(&cdir.join(format!("stats_{name}.csv")), &STATS_HEADER, &rows)?;
                vector_ess.entry(name).or_default().extend_from_slice(&stats.ess);
            }
        }
        if !hyper_rows.is_empty() {
            let mut header = STATS_HEADER;
            header[0] = "name";
            io::write_table(&cdir.join("hyper.csv"), &header, &hyper_rows)?;
        }
        let lags = acf_cols.iter().map(|(_, r)| r.len()).min().unwrap_or(0);
        let mut header = vec!["lag"];
        header.extend(acf_cols.iter().map(|(n, _)| *n));
        let rows: Vec<Vec<String>> = (0..lags)
            .map(|l| {
                let mut r = vec![l.to_string()];
                r.extend(acf_cols.iter().map(|(_, rho)| num(rho[l])));
                r
            })
            .collect();
        io::write_table(&cdir.join("acf.csv"), &header, &rows)?;
    }

    let mut s = Summary::default();
    s.push("kind", cfg.kind.name());
    s.push("seed", manifest.run.seed.to_string());
    s.push("chains", chains.len().to_string());
    s.push("draws_per_chain", chains.first().map_or(0, |c| c.rows()).to_string());
    for name in ["g", "h", "f"] {
        if !names.iter().any(|n| n == name) {
            continue;
        }
        let pooled = concat(chains, name).expect("every chain has the same variables");
        let mean = pooled.column_means();
        let ci = credible_interval(&pooled, out.credible_level)?;
        io::write_signal(&dir.join(format!("mean_{name}.txt")), grid, &mean)?;
        io::write_signal(&dir.join(format!("ci_width_{name}.txt")), grid, &ci.width)?;
        let truth = truth.get(name).expect("truth exists for g, h, f");
        let est = Signal::new(truth.grid(), mean)?;
        s.push(format!("rel_error_{name}"), num(relative_error(&est, truth)?));
        s.push(
            format!("mean_ci_width_{name}"),
            num(ci.width.iter().sum::<f64>() / ci.width.len() as f64),
        );
    }
    for name in &names {
        if let Some(ess) = vector_ess.get(name.as_str()) {
            let sp = spread(ess)?;
            s.push(format!("ess_{name}_min"), num(sp.min));
            s.push(format!("ess_{name}_median"), num(sp.median));
            s.push(format!("ess_{name}_max"), num(sp.max));
        }
        if let Some(ess) = scalar_ess.get(name.as_str()) {
            let pooled = concat(chains, name).expect("every chain has the same variables");
            s.push(format!("mean_{name}"), num(pooled.column_means()[0]));
            s.push(format!("ess_{name}_min"), num(spread(ess)?.min));
        }
    }
    let info = &manifest.chain;
    s.push("divergences", info.iter().map(|c| c.divergences).sum::<usize>().to_string());
    s.push(
        "cgls_nonconverged",
        info.iter().map(|c| c.cgls_nonconverged).sum::<usize>().to_string(),
    );

    let rows: Vec<Vec<String>> = s.rows.iter().map(|(k, v)| vec![k.clone(), v.clone()]).collect();
    io::write_table(&dir.join("summary.csv"), &["metric", "value"], &rows)?;
    io::write_text(&dir.join("summary.txt"), &summary_text(manifest, &s))?;
    Ok(s)
}

fn summary_text(manifest: &Manifest, s: &Summary) -> String {
    let cfg = &manifest.config;
    let mut t = String::new();
    let _ = writeln!(t, "experiment   {}", cfg.kind.name());
    let _ = writeln!(
        t,
        "grid         d = {}, J = {} ({} points)",
        cfg.grid.dim,
        cfg.grid.levels,
        1usize << (cfg.grid.dim as u32 * cfg.grid.levels)
    );
    let _ = writeln!(
        t,
        "data         kernel sigma {} ({}), noise level {}, noise sd {:.6e}",
        cfg.data.kernel_sigma, manifest.run.forward, cfg.data.noise_level, manifest.run.noise_sigma
    );
    let _ = writeln!(
        t,
        "sampler      {} iterations, burn-in {}, thin {}, seed {}",
        cfg.sampler.n_samples, cfg.sampler.burn_in, cfg.sampler.thin, manifest.run.seed
    );
    let _ = writeln!(t);
    for (k, v) in &s.rows {
        if matches!(k.as_str(), "kind" | "seed") {
            continue;
        }
        match v.parse::<f64>() {
            Ok(x) if v.contains('e') => {
                let _ = writeln!(t, "{k:<24} {}", short(x));
            }
            _ => {
                let _ = writeln!(t, "{k:<24} {v}");
            }
        }
    }
    let _ = writeln!(t);
    for c in &manifest.chain {
        let _ = write!(t, "chain {}: {:.1} s, {} draws", c.index, c.wall_time_secs, c.kept);
        if let (Some(eps), Some(acc), Some(depth)) = (c.step_size, c.mean_accept, c.mean_tree_depth) {
            let _ = write!(
                t,
                ", step {eps:.4e}, accept {acc:.3}, depth {depth:.2}, {} divergent",
                c.divergences
            );
        }
        if c.cgls_solves > 0 {
            let _ = write!(
                t,
                ", {:.1} CGLS iterations per solve, {} unconverged",
                c.cgls_iterations as f64 / c.cgls_solves as f64,
                c.cgls_nonconverged
            );
        }
        let _ = writeln!(t);
    }
    let total: f64 = manifest.chain.iter().map(|c| c.wall_time_secs).sum();
    let _ = writeln!(t, "runtime      {total:.1} s of sampling");
    t
}

/// Recomputes every stats file of a finished run from its chain files.
pub fn diagnose(dir: &Path) -> CliResult<Summary> {
    let manifest = Manifest::read(dir)?;
    let cfg = &manifest.config;
    if !cfg.output.write_chains {
        return Err(CliError::Config(format!(
            "{} was run with output.write_chains = false; nothing to diagnose",
            dir.display()
        )));
    }
    if manifest.run.status != Status::Complete || manifest.chain.len() != manifest.run.chains {
        return Err(CliError::Config(format!(
            "{} is {:?} with {} of {} chains; only finished runs can be diagnosed",
            dir.display(),
            manifest.run.status,
            manifest.chain.len(),
            manifest.run.chains
        )));
    }
    let names = variables(cfg);
    let mut chains = Vec::with_capacity(manifest.chain.len());
    for info in &manifest.chain {
        let cdir = chain_dir(dir, info.index);
        let vars = ChainVars::read(&cdir, &names)?;
        for (name, m) in vars.iter() {
            if m.rows() != info.kept {
                return Err(CliError::parse(
                    cdir.join(format!("{name}.csv")),
                    format!("{} draws, manifest records {}", m.rows(), info.kept),
                ));
            }
        }
        chains.push(vars);
    }
    let truth = Truth::read(dir, cfg.grid()?)?;
    write_reports(dir, &manifest, &chains, &truth)
}

/// Side-by-side table of several runs' `summary.csv`; rows are metrics in
/// first-seen order, columns the run directories.
pub fn compare(dirs: &[&Path]) -> CliResult<Vec<Vec<String>>> {
    let summaries: Vec<Summary> = dirs.iter().map(|d| Summary::read(d)).collect::<CliResult<_>>()?;
    let mut header = vec!["metric".to_string()];
    header.extend(dirs.iter().map(|d| {
        d.file_name()
            .map_or_else(|| d.display().to_string(), |n| n.to_string_lossy().into_owned())
    }));
    let mut metrics: Vec<&str> = Vec::new();
    for s in &summaries {
        for (k, _) in &s.rows {
            if !metrics.contains(&k.as_str()) {
                metrics.push(k);
            }
        }
    }
    let mut table = vec![header];
    for m in metrics {
        let mut row = vec![m.to_string()];
        row.extend(summaries.iter().map(|s| s.get(m).unwrap_or("").to_string()));
        table.push(row);
    }
    Ok(table)
}

/// Six significant digits for display.
pub fn short(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-3..1e6).contains(&a) {
        let digits = if a == 0.0 { 5 } else { (5 - a.log10().floor() as i32).max(0) as usize };
        format!("{x:.digits$}")
    } else {
        format!("{x:.5e}")
    }
}

/// Fixed-width rendering with floats shortened for reading.
pub fn render_table(table: &[Vec<String>]) -> String {
    let cells: Vec<Vec<String>> = table
        .iter()
        .map(|r| {
            r.iter()
                .map(|c| match c.parse::<f64>() {
                    Ok(x) if c.contains('e') => short(x),
                    _ => c.clone(),
                })
                .collect()
        })
        .collect();
    let cols = cells.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|j| cells.iter().filter_map(|r| r.get(j)).map(String::len).max().unwrap_or(0))
        .collect();
    let mut t = String::new();
    for r in &cells {
        let line: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(j, c)| format!("{c:<w$}", w = widths[j]))
            .collect();
        let _ = writeln!(t, "{}", line.join("  ").trim_end());
    }
    t
}
