use std::path::PathBuf;
use std::process::ExitCode;

use besov_decomp_cli::config::ExperimentConfig;
use besov_decomp_cli::report::{compare, diagnose, render_table};
use besov_decomp_cli::run::{run_experiment, write_phantom, RunOptions};
use besov_decomp_cli::{io, CliResult};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "besov-decomp", version, about = "Bayesian signal decomposition with Besov priors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the ground truth and noisy data of a config without sampling.
    Phantom {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run an experiment and write chains, statistics and summaries.
    Run {
        /// Experiment config, or the manifest.toml of an earlier run.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides sampler.seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Independent chains, run concurrently on separate RNG streams.
        #[arg(long, default_value_t = 1)]
        chains: usize,
    },
    /// Recompute the statistics of a run directory from its chain files.
    Diagnose {
        #[arg(long)]
        out: PathBuf,
    },
    /// Tabulate the summaries of several runs side by side.
    Compare {
        dirs: Vec<PathBuf>,
        /// Also write the table as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn dispatch(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Phantom { config, out, seed } => {
            let cfg = ExperimentConfig::load(&config)?;
            write_phantom(&cfg, &out, seed)?;
            println!("wrote phantom and data to {}", out.display());
        }
        Command::Run { config, out, seed, chains } => {
            let cfg = ExperimentConfig::load(&config)?;
            let report = run_experiment(&cfg, &RunOptions { out, seed, chains })?;
            let text = std::fs::read_to_string(report.dir.join("summary.txt")).unwrap_or_default();
            print!("{text}");
        }
        Command::Diagnose { out } => {
            diagnose(&out)?;
            println!("recomputed statistics in {}", out.display());
        }
        Command::Compare { dirs, out } => {
            let refs: Vec<&std::path::Path> = dirs.iter().map(PathBuf::as_path).collect();
            let table = compare(&refs)?;
            print!("{}", render_table(&table));
            if let Some(path) = out {
                let header: Vec<&str> = table[0].iter().map(String::as_str).collect();
                io::write_table(&path, &header, &table[1..])?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
