//! Benchmark driver. Verbs cover the full pipeline: generate planted
//! instances, reduce them to quadratic form, run solvers, probe hardness
//! with population annealing, aggregate reports, and audit outputs.
//!
//! Exit codes: 0 success, 1 usage, 2 I/O or internal failure,
//! 3 verification failure.

mod commands;
mod config;
mod manifest;

use std::fmt;
use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};

use hobo_core::solvers::{RhoProtocol, Schedule};

use commands::verify::VerifyFailure;
use config::ExperimentConfig;

#[derive(Parser)]
#[command(
    name = "hobo-bench",
    version,
    about = "Plant, reduce, solve, and score higher-order binary optimization benchmarks"
)]
struct Cli {
    /// Master seed (overrides the config file)
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output root (overrides the config file)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for instance-level parallelism. Does not change any
    /// output value, only wall time.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,

    /// Key=value config file; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the configured grid of planted instance sets plus a checksum
    /// manifest
    Generate,

    /// Reduce an instance set to quadratic form
    Reduce {
        /// Instance set directory
        input: PathBuf,
        /// Penalty strategy: tight | global
        #[arg(long)]
        penalty: Option<String>,
        /// Output directory (default: sibling "<set>-reduced-<strategy>")
        #[arg(long)]
        to: Option<PathBuf>,
    },

    /// Run seeded solver runs over an instance set, appending result rows
    Solve {
        /// Instance set directory
        input: PathBuf,
        /// Solver: pt | sa
        #[arg(long, default_value = "pt")]
        solver: String,
        /// Results table to append to (default: <out>/results.csv)
        #[arg(long)]
        results: Option<PathBuf>,
    },

    /// Estimate a converged replica diversity rho_s per instance by
    /// population doubling
    Pamc {
        /// Instance set directory
        input: PathBuf,
        /// Starting population size
        #[arg(long, default_value_t = 8)]
        r0: usize,
        /// Population ceiling for the doubling protocol
        #[arg(long, default_value_t = 1024)]
        max_r: usize,
        /// Independent runs per population size
        #[arg(long, default_value_t = 100)]
        restarts: usize,
        /// Metropolis sweeps per schedule step
        #[arg(long, default_value_t = 5)]
        sweeps: usize,
        /// Final inverse temperature of the linear schedule
        #[arg(long, default_value_t = 20.0)]
        beta_end: f64,
        /// Steps in the linear schedule
        #[arg(long, default_value_t = 100)]
        schedule_steps: usize,
        /// Wall-clock budget per instance, seconds
        #[arg(long)]
        budget_s: Option<f64>,
        /// Output directory (default: <out>/pamc-<set>)
        #[arg(long)]
        to: Option<PathBuf>,
    },

    /// Aggregate a results table into summary and plot-data CSVs
    Report {
        /// Results table (default: <out>/results.csv)
        #[arg(long)]
        results: Option<PathBuf>,
        /// rho_s.csv produced by the pamc verb
        #[arg(long)]
        rho: Option<PathBuf>,
        /// Instance set directories feeding the coupler and misfit columns
        /// (repeatable)
        #[arg(long = "instances")]
        instances: Vec<PathBuf>,
        /// Output directory (default: <out>/report)
        #[arg(long)]
        to: Option<PathBuf>,
    },

    /// Audit an output tree: manifest checksums plus brute-force checks of
    /// small instances
    Verify {
        /// Tree to audit (default: <out>)
        path: Option<PathBuf>,
        /// Largest variable count to brute-force
        #[arg(long, default_value_t = 20)]
        max_n: usize,
    },
}

/// Marker attached to errors that should exit with the usage code.
#[derive(Debug, Clone, Copy)]
struct UsageError;

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("invalid usage")
    }
}

impl std::error::Error for UsageError {}

fn usage(err: anyhow::Error) -> anyhow::Error {
    err.context(UsageError)
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path).map_err(usage)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

fn dispatch(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli)?;
    match cli.command {
        Command::Generate => commands::generate::run(&cfg),
        Command::Reduce { input, penalty, to } => {
            let strategy = match penalty {
                Some(name) => config::parse_penalty(&name).map_err(usage)?,
                None => cfg.penalty,
            };
            commands::reduce::run(&input, strategy, to)
        }
        Command::Solve { input, solver, results } => {
            let solver = commands::solve::Solver::parse(&solver).map_err(usage)?;
            let results = results.unwrap_or_else(|| commands::solve::default_results_path(&cfg.out));
            commands::solve::run(&input, solver, &cfg, &results, cli.workers)
        }
        Command::Pamc {
            input,
            r0,
            max_r,
            restarts,
            sweeps,
            beta_end,
            schedule_steps,
            budget_s,
            to,
        } => {
            let protocol = RhoProtocol {
                r0,
                max_r,
                restarts,
                schedule: Schedule::LinearBeta {
                    beta_start: 0.0,
                    beta_end,
                    steps: schedule_steps,
                },
                sweeps_per_step: sweeps,
                time_budget_s: budget_s,
            };
            let out = to.unwrap_or_else(|| {
                cfg.out.join(format!("pamc-{}", commands::set_label(&input)))
            });
            commands::pamc::run(&input, &protocol, cfg.seed, &out, cli.workers)
        }
        Command::Report { results, rho, instances, to } => {
            let results = results.unwrap_or_else(|| commands::solve::default_results_path(&cfg.out));
            let out = to.unwrap_or_else(|| cfg.out.join("report"));
            commands::report::run(&results, rho.as_deref(), &instances, &out)
        }
        Command::Verify { path, max_n } => {
            let root = path.unwrap_or_else(|| cfg.out.clone());
            commands::verify::run(&root, max_n)
        }
    }
}

fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<VerifyFailure>().is_some() {
        3
    } else if err.downcast_ref::<UsageError>().is_some() {
        1
    } else {
        2
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // --help and --version land here with non-error kinds
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    if let Err(err) = dispatch(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(exit_code(&err));
    }
}
