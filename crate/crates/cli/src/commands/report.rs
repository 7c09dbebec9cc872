//! `report`: aggregate a results table (plus optional rho_s estimates and
//! instance sets) into one summary CSV and a handful of plot-ready data
//! files. All outputs are plain CSV; rendering happens out of process.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use hobo_core::metrics::{self, BenchmarkRecord, SOLVED_REL_TOL};
use hobo_core::poly::{Configuration, Domain};
use hobo_core::rng;
use hobo_core::solvers::SolveRun;
use hobo_core::stats;

use crate::commands::{mean_std, median, set_label};
use crate::commands::solve::{read_rows, ResultRow};

/// One (k, N) cell of the summary table. Empty cells mean "not estimable
/// from the given inputs" (TTS below the solved-fraction floor, or no
/// rho_s / instance files supplied).
#[derive(Debug, Serialize)]
struct AggregateRow {
    k: usize,
    #[serde(rename = "N")]
    n: usize,
    fraction_solved: f64,
    tts_median: Option<f64>,
    tts_ci_lo: Option<f64>,
    tts_ci_hi: Option<f64>,
    rho_s_mean: Option<f64>,
    rho_s_std: Option<f64>,
    mu0_mean: Option<f64>,
    coupler_std: Option<f64>,
    coupler_kurtosis: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct RhoRowIn {
    k: usize,
    #[serde(rename = "N")]
    n: usize,
    #[allow(dead_code)]
    instance_id: String,
    rho_s_mean: f64,
    #[allow(dead_code)]
    rho_s_std: f64,
    converged: bool,
}

#[derive(Debug, Serialize)]
struct TtsRow {
    k: usize,
    #[serde(rename = "N")]
    n: usize,
    fraction_solved: f64,
    tts_median: Option<f64>,
    tts_ci_lo: Option<f64>,
    tts_ci_hi: Option<f64>,
    instances_estimable: usize,
    instances_total: usize,
}

#[derive(Debug, Serialize)]
struct FitRow {
    k: usize,
    alpha: f64,
    beta: f64,
    beta_stderr: f64,
    sizes: String,
}

#[derive(Debug, Serialize)]
struct MisfitRow {
    k: usize,
    #[serde(rename = "N")]
    n: usize,
    mu0_mean: f64,
    mu0_std: f64,
    instances: usize,
}

#[derive(Debug, Serialize)]
struct RhoOutRow {
    k: usize,
    #[serde(rename = "N")]
    n: usize,
    rho_s_mean: f64,
    rho_s_std: f64,
    converged: usize,
    instances: usize,
}

#[derive(Debug, Serialize)]
struct HistRow {
    set: String,
    k: usize,
    #[serde(rename = "N")]
    n: usize,
    bin_lo: f64,
    bin_hi: f64,
    count: u64,
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut writer =
        csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Collapse duplicate (instance, run) pairs to the row with the largest
/// timeout, so escalated retries supersede their base-timeout attempts.
fn collapse(rows: Vec<ResultRow>) -> Vec<ResultRow> {
    let mut best: BTreeMap<(String, u64), ResultRow> = BTreeMap::new();
    for row in rows {
        let key = (row.instance_id.clone(), row.run_id);
        match best.get(&key) {
            Some(prev) if prev.timeout_s >= row.timeout_s => {}
            _ => {
                best.insert(key, row);
            }
        }
    }
    best.into_values().collect()
}

fn dummy_run(row: &ResultRow) -> Result<SolveRun> {
    Ok(SolveRun {
        best_energy: row.best_energy,
        best_config: Configuration::new(Domain::Spin, vec![1])?,
        tau: row.tau_s,
        timeout_s: Some(row.timeout_s),
        timed_out: false,
        seed: row.seed,
        sweeps: 0,
        params: String::new(),
        hit_planted: Some(row.solved),
    })
}

/// Median-of-instances summary of per-instance TTS estimates for one
/// (k, N) cell. The cell is declared not estimable when the pooled solved
/// fraction sits below the 0.5 floor the per-record bootstrap needs.
fn cell_tts(
    records: &[BenchmarkRecord],
    pooled_fraction: f64,
    k: usize,
    n: usize,
) -> Result<(Option<f64>, Option<f64>, Option<f64>, usize)> {
    if pooled_fraction < 0.5 {
        return Ok((None, None, None, 0));
    }
    let mut tts = Vec::new();
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for (idx, rec) in records.iter().enumerate() {
        let seed = rng::derive(0xB007_5EED, &[k as u64, n as u64, idx as u64]);
        match metrics::tts(rec, SOLVED_REL_TOL, seed) {
            Ok(est) => {
                tts.push(est.tts);
                lo.push(est.ci_lo);
                hi.push(est.ci_hi);
            }
            Err(_) => {} // instance below the floor; the cell median skips it
        }
    }
    if tts.is_empty() {
        return Ok((None, None, None, 0));
    }
    Ok((Some(median(&tts)), Some(median(&lo)), Some(median(&hi)), tts.len()))
}

pub fn run(
    results: &Path,
    rho: Option<&Path>,
    instance_dirs: &[PathBuf],
    out: &Path,
) -> Result<()> {
    let rows = read_rows(results)?;
    if rows.is_empty() {
        bail!("no result rows in {}", results.display());
    }
    std::fs::create_dir_all(out)?;
    let rows = collapse(rows);

    // (k, N) -> instance_id -> rows
    let mut cells: BTreeMap<(usize, usize), BTreeMap<String, Vec<&ResultRow>>> = BTreeMap::new();
    for row in &rows {
        cells
            .entry((row.k, row.n))
            .or_default()
            .entry(row.instance_id.clone())
            .or_default()
            .push(row);
    }

    // optional rho_s estimates, keyed like the cells
    let mut rho_cells: BTreeMap<(usize, usize), Vec<RhoRowIn>> = BTreeMap::new();
    if let Some(path) = rho {
        let mut reader = csv::Reader::from_path(path)
            .with_context(|| format!("opening rho_s table {}", path.display()))?;
        for row in reader.deserialize::<RhoRowIn>() {
            let row = row?;
            rho_cells.entry((row.k, row.n)).or_default().push(row);
        }
    }

    // optional instance sets: misfit on the boolean form (the frame the
    // reduction gadgets are defined in), coupler moments on the spin form
    let mut misfit_cells: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    let mut coupler_cells: BTreeMap<(usize, usize), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    let mut hist_rows: Vec<HistRow> = Vec::new();
    for dir in instance_dirs {
        let set = crate::commands::load_set(dir)?;
        let label = set_label(dir);
        let mut pooled: Vec<f64> = Vec::new();
        let mut set_key = None;
        for stored in &set {
            let key = (stored.instance.meta.k as usize, stored.original_n());
            set_key = Some(key);
            let poly = &stored.instance.poly;
            let boolean = match poly.domain() {
                Domain::Bool => poly.clone(),
                Domain::Spin => poly.to_boolean()?,
            };
            misfit_cells
                .entry(key)
                .or_default()
                .push(stats::misfit(&boolean, stored.instance.planted_energy)?);
            let spin = match poly.domain() {
                Domain::Spin => poly.clone(),
                Domain::Bool => poly.to_spin()?,
            };
            let cs = stats::coupler_stats(&spin)?;
            let slot = coupler_cells.entry(key).or_default();
            slot.0.push(cs.std);
            if let Some(kurt) = cs.kurtosis {
                slot.1.push(kurt);
            }
            pooled.extend(spin.terms().map(|(_, c)| c));
        }
        if let (Some((k, n)), false) = (set_key, pooled.is_empty()) {
            let hist = stats::freedman_diaconis(&pooled);
            for (i, &count) in hist.counts.iter().enumerate() {
                hist_rows.push(HistRow {
                    set: label.clone(),
                    k,
                    n,
                    bin_lo: hist.edges[i],
                    bin_hi: hist.edges[i + 1],
                    count,
                });
            }
        }
    }

    let mut aggregate = Vec::new();
    let mut tts_rows = Vec::new();
    let mut fit_points: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
    for (&(k, n), by_instance) in &cells {
        let mut records = Vec::new();
        for (id, rows) in by_instance {
            let runs: Vec<SolveRun> =
                rows.iter().map(|r| dummy_run(r)).collect::<Result<_>>()?;
            let planted = rows[0].planted_energy;
            records.push(BenchmarkRecord::new(id.clone(), k, n, planted, runs)?);
        }
        let fraction = metrics::fraction_solved(&records, SOLVED_REL_TOL)?;
        let (tts_median, tts_ci_lo, tts_ci_hi, estimable) =
            cell_tts(&records, fraction, k, n)?;
        if let Some(t) = tts_median {
            fit_points.entry(k).or_default().push((n, t));
        }
        let rho_rows = rho_cells.get(&(k, n));
        let (rho_mean, rho_std) = match rho_rows {
            Some(rows) if !rows.is_empty() => {
                let means: Vec<f64> = rows.iter().map(|r| r.rho_s_mean).collect();
                let (m, s) = mean_std(&means);
                (Some(m), Some(s))
            }
            _ => (None, None),
        };
        let mu0_mean = misfit_cells.get(&(k, n)).map(|v| mean_std(v).0);
        let (coupler_std, coupler_kurtosis) = match coupler_cells.get(&(k, n)) {
            Some((stds, kurts)) => (
                Some(mean_std(stds).0),
                if kurts.is_empty() { None } else { Some(mean_std(kurts).0) },
            ),
            None => (None, None),
        };
        aggregate.push(AggregateRow {
            k,
            n,
            fraction_solved: fraction,
            tts_median,
            tts_ci_lo,
            tts_ci_hi,
            rho_s_mean: rho_mean,
            rho_s_std: rho_std,
            mu0_mean,
            coupler_std,
            coupler_kurtosis,
        });
        tts_rows.push(TtsRow {
            k,
            n,
            fraction_solved: fraction,
            tts_median,
            tts_ci_lo,
            tts_ci_hi,
            instances_estimable: estimable,
            instances_total: by_instance.len(),
        });
    }

    let mut fit_rows = Vec::new();
    for (&k, points) in &fit_points {
        if points.len() < 3 {
            continue;
        }
        let fit = metrics::fit_scaling(points, 3)?;
        fit_rows.push(FitRow {
            k,
            alpha: fit.alpha,
            beta: fit.beta,
            beta_stderr: fit.beta_stderr,
            sizes: fit.sizes.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(";"),
        });
    }

    let misfit_rows: Vec<MisfitRow> = misfit_cells
        .iter()
        .map(|(&(k, n), values)| {
            let (m, s) = mean_std(values);
            MisfitRow { k, n, mu0_mean: m, mu0_std: s, instances: values.len() }
        })
        .collect();
    let rho_out_rows: Vec<RhoOutRow> = rho_cells
        .iter()
        .map(|(&(k, n), rows)| {
            let means: Vec<f64> = rows.iter().map(|r| r.rho_s_mean).collect();
            let (m, s) = mean_std(&means);
            RhoOutRow {
                k,
                n,
                rho_s_mean: m,
                rho_s_std: s,
                converged: rows.iter().filter(|r| r.converged).count(),
                instances: rows.len(),
            }
        })
        .collect();

    write_csv(&out.join("aggregate.csv"), &aggregate)?;
    write_csv(&out.join("tts_vs_n.csv"), &tts_rows)?;
    write_csv(&out.join("scaling_fit.csv"), &fit_rows)?;
    if !misfit_rows.is_empty() {
        write_csv(&out.join("misfit_vs_n.csv"), &misfit_rows)?;
    }
    if !rho_out_rows.is_empty() {
        write_csv(&out.join("rho_vs_n.csv"), &rho_out_rows)?;
    }
    if !hist_rows.is_empty() {
        write_csv(&out.join("coupler_hist.csv"), &hist_rows)?;
    }
    println!(
        "{} cells aggregated ({} scaling fits) into {}",
        aggregate.len(),
        fit_rows.len(),
        out.display()
    );
    Ok(())
}
