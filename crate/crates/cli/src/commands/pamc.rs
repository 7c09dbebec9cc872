//! `pamc`: population-annealing hardness probe over an instance set.
//! Per instance, runs the doubling protocol to a converged rho_s estimate
//! and writes three CSV files: the final estimates, the per-population
//! doubling trace behind them, and a per-step trace of one run at the
//! final population size (for entropy/plateau plots).

use std::path::Path;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use hobo_core::rng;
use hobo_core::solvers::{population_annealing, rho_s_converged, PamcEstimate, RhoProtocol};
use hobo_core::stats;

use crate::commands::{set_label, StoredInstance};

#[derive(Debug, Serialize)]
struct RhoRow {
    k: usize,
    #[serde(rename = "N")]
    n: usize,
    instance_id: String,
    seed: u64,
    r_final: usize,
    restarts: usize,
    rho_s_mean: f64,
    rho_s_std: f64,
    converged: bool,
}

#[derive(Debug, Serialize)]
struct LevelRow {
    instance_id: String,
    r: usize,
    rho_s_mean: f64,
    rho_s_std: f64,
}

#[derive(Debug, Serialize)]
struct StepRow {
    instance_id: String,
    r: usize,
    step: usize,
    beta: f64,
    mean_energy: f64,
    family_entropy: f64,
    surviving_families: usize,
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("writing {}", path.display()))?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn run(
    input: &Path,
    protocol: &RhoProtocol,
    master_seed: u64,
    out: &Path,
    workers: usize,
) -> Result<()> {
    let set = crate::commands::load_set(input)?;
    let label = set_label(input);
    std::fs::create_dir_all(out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .context("building worker pool")?;

    let estimates: Vec<(usize, PamcEstimate, u64)> = pool.install(|| {
        set.par_iter()
            .enumerate()
            .map(|(i, stored)| {
                let seed = rng::derive(master_seed, &[i as u64]);
                let est = rho_s_converged(&stored.instance.poly, protocol, seed)?;
                Ok((i, est, seed))
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut rho_rows = Vec::new();
    let mut level_rows = Vec::new();
    let mut step_rows = Vec::new();
    for (i, est, seed) in &estimates {
        let stored: &StoredInstance = &set[*i];
        let id = stored.id(&label);
        rho_rows.push(RhoRow {
            k: stored.instance.meta.k as usize,
            n: stored.original_n(),
            instance_id: id.clone(),
            seed: *seed,
            r_final: est.r_final,
            restarts: est.restarts,
            rho_s_mean: est.rho_s_mean,
            rho_s_std: est.rho_s_std,
            converged: est.converged,
        });
        for level in &est.trace {
            level_rows.push(LevelRow {
                instance_id: id.clone(),
                r: level.r,
                rho_s_mean: level.mean,
                rho_s_std: level.std,
            });
        }
        // one fresh run at the final population for the per-step picture
        let (norm, _) = stats::normalize(&stored.instance.poly)?;
        let run = population_annealing(
            &norm,
            est.r_final,
            &protocol.schedule,
            protocol.sweeps_per_step,
            rng::derive(*seed, &[u64::MAX]),
        )?;
        for (step, s) in run.steps.iter().enumerate() {
            step_rows.push(StepRow {
                instance_id: id.clone(),
                r: run.r,
                step,
                beta: s.beta,
                mean_energy: s.mean_energy,
                family_entropy: s.family_entropy,
                surviving_families: s.surviving_families,
            });
        }
    }

    write_csv(&out.join("rho_s.csv"), &rho_rows)?;
    write_csv(&out.join("rho_levels.csv"), &level_rows)?;
    write_csv(&out.join("pamc_steps.csv"), &step_rows)?;
    let converged = rho_rows.iter().filter(|r| r.converged).count();
    println!(
        "{label}: {} instances, {converged} converged, rho_s written to {}",
        rho_rows.len(),
        out.display()
    );
    Ok(())
}
