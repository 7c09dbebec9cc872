//! `solve`: run the configured number of seeded solver runs per instance
//! and append one CSV row each. Appends are atomic (all rows of an
//! invocation are written in one pass by a single writer), completed
//! (instance, run, timeout) keys are skipped on re-invocation, and runs
//! left unsolved at the base timeout are retried once at the escalation
//! timeout.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use hobo_core::metrics::{self, SOLVED_REL_TOL};
use hobo_core::rng;
use hobo_core::solvers::{
    auto_tune_ladder, default_replica_count, parallel_tempering, simulated_annealing, Schedule,
    SolveRun,
};

use crate::commands::{set_label, StoredInstance};
use crate::config::ExperimentConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Sa,
    Pt,
}

impl Solver {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sa" => Ok(Solver::Sa),
            "pt" => Ok(Solver::Pt),
            other => bail!("unknown solver {other:?} (expected sa or pt)"),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ResultRow {
    pub k: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub instance_id: String,
    pub run_id: u64,
    pub seed: u64,
    pub timeout_s: f64,
    pub tau_s: f64,
    pub best_energy: f64,
    pub planted_energy: f64,
    pub solved: bool,
    pub residual: f64,
}

type RowKey = (String, u64, u64);

fn key_of(row: &ResultRow) -> RowKey {
    (row.instance_id.clone(), row.run_id, row.timeout_s.to_bits())
}

pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("opening results {}", path.display()))?;
    let mut rows = Vec::new();
    for row in reader.deserialize() {
        rows.push(row.with_context(|| format!("malformed row in {}", path.display()))?);
    }
    Ok(rows)
}

fn append_rows(path: &Path, rows: &[ResultRow]) -> Result<()> {
    if rows.is_empty() {
        return Ok(());
    }
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let fresh = !path.exists() || std::fs::metadata(path)?.len() == 0;
    let file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    let mut writer = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Tempering ladder: tuned endpoints, cold end floored at 1% of the hot
/// end so extreme coefficient spreads do not stretch the ladder thin.
fn ladder(poly: &hobo_core::poly::Polynomial) -> Result<(f64, f64)> {
    let (t_min, t_max) = auto_tune_ladder(poly)?;
    Ok((t_min.max(t_max / 100.0), t_max))
}

fn run_one(
    solver: Solver,
    stored: &StoredInstance,
    seed: u64,
    timeout_s: f64,
) -> Result<SolveRun> {
    let inst = &stored.instance;
    match solver {
        Solver::Pt => {
            let (t_lo, t_hi) = ladder(&inst.poly)?;
            Ok(parallel_tempering(
                &inst.poly,
                default_replica_count(inst.poly.num_vars()),
                t_lo,
                t_hi,
                30,
                timeout_s,
                seed,
                Some(inst.planted_energy),
            )?)
        }
        Solver::Sa => {
            let schedule = Schedule::default_anneal();
            Ok(simulated_annealing(
                &inst.poly,
                &schedule,
                10,
                seed,
                Some(inst.planted_energy),
                Some(timeout_s),
            )?)
        }
    }
}

pub fn run(
    input: &Path,
    solver: Solver,
    cfg: &ExperimentConfig,
    results: &Path,
    workers: usize,
) -> Result<()> {
    let set = crate::commands::load_set(input)?;
    let label = set_label(input);
    let existing = read_rows(results)?;
    let done: HashSet<RowKey> = existing.iter().map(key_of).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .context("building worker pool")?;

    let mut all_rows = existing;
    for (phase, timeout_s) in [(1usize, cfg.timeout_s), (2, cfg.timeout_escalation_s)] {
        let mut jobs: Vec<(usize, u64)> = Vec::new();
        for (i, stored) in set.iter().enumerate() {
            for run_id in 0..cfg.runs_per_instance as u64 {
                let id = stored.id(&label);
                let key = (id.clone(), run_id, timeout_s.to_bits());
                if done.contains(&key) {
                    continue;
                }
                if phase == 2 {
                    // escalate only runs that failed at the base timeout
                    let failed_at_base = all_rows.iter().any(|r| {
                        r.instance_id == id
                            && r.run_id == run_id
                            && r.timeout_s == cfg.timeout_s
                            && !r.solved
                    });
                    if !failed_at_base {
                        continue;
                    }
                }
                jobs.push((i, run_id));
            }
        }
        if phase == 2 && (jobs.is_empty() || cfg.timeout_escalation_s <= cfg.timeout_s) {
            break;
        }
        let rows: Vec<ResultRow> = pool.install(|| {
            jobs.par_iter()
                .map(|&(i, run_id)| {
                    let stored = &set[i];
                    let instance_seed = rng::derive(cfg.seed, &[i as u64]);
                    let seed = rng::derive(instance_seed, &[run_id, phase as u64]);
                    let run = run_one(solver, stored, seed, timeout_s)?;
                    let planted = stored.instance.planted_energy;
                    Ok(ResultRow {
                        k: stored.instance.meta.k as usize,
                        n: stored.original_n(),
                        instance_id: stored.id(&label),
                        run_id,
                        seed,
                        timeout_s,
                        tau_s: run.tau,
                        best_energy: run.best_energy,
                        planted_energy: planted,
                        solved: metrics::is_solved(run.best_energy, planted, SOLVED_REL_TOL),
                        residual: metrics::residual(planted, run.best_energy)?,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let mut sorted = rows;
        sorted.sort_by(|a, b| key_of(a).cmp(&key_of(b)));
        let solved = sorted.iter().filter(|r| r.solved).count();
        println!(
            "phase {phase} (timeout {timeout_s}s): {} runs, {solved} solved",
            sorted.len()
        );
        append_rows(results, &sorted)?;
        all_rows.extend(sorted);
    }
    println!("results in {}", results.display());
    Ok(())
}

pub fn default_results_path(out: &Path) -> PathBuf {
    out.join("results.csv")
}
