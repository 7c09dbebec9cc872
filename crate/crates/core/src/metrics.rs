//! Benchmark metrics: success probability, repetition counts, bootstrapped
//! time-to-solution, residual energies, and size-scaling fits.
//!
//! Conventions: a run is "solved" when its best energy is within a relative
//! tolerance of the reference optimum, with a small absolute floor so
//! zero-crossing optima do not divide by nothing. Time-to-solution is
//! median wall time times R99, with uncertainty from a seeded bootstrap
//! over per-run success indicators (2.5/97.5 percentiles, roughly 2 sigma).

use serde::{Deserialize, Serialize};

use crate::rng;
use crate::solvers::SolveRun;
use crate::{Error, Result};

/// Default relative tolerance for the solved test.
pub const SOLVED_REL_TOL: f64 = 1e-9;
/// Absolute floor for the solved test, covering optima at or near zero.
pub const SOLVED_ABS_TOL: f64 = 1e-6;
/// Bootstrap resamples behind every TTS interval.
pub const BOOTSTRAP_RESAMPLES: usize = 10_000;

/// All runs of one instance under one solver configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkRecord {
    pub instance_id: String,
    pub k: usize,
    pub n: usize,
    pub planted_energy: f64,
    pub runs: Vec<SolveRun>,
}

impl BenchmarkRecord {
    pub fn new(
        instance_id: impl Into<String>,
        k: usize,
        n: usize,
        planted_energy: f64,
        runs: Vec<SolveRun>,
    ) -> Result<Self> {
        if runs.is_empty() {
            return Err(Error::invalid("a benchmark record needs at least one run"));
        }
        Ok(BenchmarkRecord { instance_id: instance_id.into(), k, n, planted_energy, runs })
    }
}

/// Solved test: |best - reference| within `tol` relative, floored at
/// [`SOLVED_ABS_TOL`] absolute.
pub fn is_solved(best_energy: f64, reference: f64, tol: f64) -> bool {
    (best_energy - reference).abs() <= (tol * reference.abs()).max(SOLVED_ABS_TOL)
}

/// Fraction of runs in `rec` that reached the planted energy.
pub fn success_probability(rec: &BenchmarkRecord, tol: f64) -> Result<f64> {
    if rec.runs.is_empty() {
        return Err(Error::invalid("success probability of an empty record"));
    }
    let hits =
        rec.runs.iter().filter(|r| is_solved(r.best_energy, rec.planted_energy, tol)).count();
    Ok(hits as f64 / rec.runs.len() as f64)
}

/// Repetitions to reach the optimum at least once with 99% confidence:
/// max(1, ln(0.01)/ln(1-p)). p = 1 needs exactly one repetition; p <= 0
/// is not estimable and errors.
pub fn r99(p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid(format!("success probability {p} not estimable")));
    }
    if p == 1.0 {
        return Ok(1.0);
    }
    Ok((0.01f64.ln() / (1.0 - p).ln()).max(1.0))
}

/// Relative residual of a best-found energy against the optimum:
/// (e_gs - e_best)/e_gs. Requires e_gs != 0 and e_best >= e_gs - 1e-9.
/// For the planted instances optima are negative, making this
/// non-negative and zero exactly at the optimum.
pub fn residual(e_gs: f64, e_best: f64) -> Result<f64> {
    if e_gs == 0.0 {
        return Err(Error::invalid("residual undefined for a zero ground energy"));
    }
    if e_best < e_gs - 1e-9 {
        return Err(Error::invalid(format!(
            "best energy {e_best} below the reference optimum {e_gs}"
        )));
    }
    // + 0.0 avoids returning -0.0 when the optimum was reached exactly
    Ok((e_gs - e_best) / e_gs + 0.0)
}

/// Residual of every run in `rec` against its planted energy.
pub fn residuals(rec: &BenchmarkRecord) -> Result<Vec<f64>> {
    rec.runs.iter().map(|r| residual(rec.planted_energy, r.best_energy)).collect()
}

/// Pooled solved fraction over all runs of all records, i.e. the
/// run-count-weighted mean of per-record success probabilities.
pub fn fraction_solved(records: &[BenchmarkRecord], tol: f64) -> Result<f64> {
    let mut hits = 0usize;
    let mut total = 0usize;
    for rec in records {
        if rec.runs.is_empty() {
            return Err(Error::invalid("fraction_solved over an empty record"));
        }
        hits +=
            rec.runs.iter().filter(|r| is_solved(r.best_energy, rec.planted_energy, tol)).count();
        total += rec.runs.len();
    }
    if total == 0 {
        return Err(Error::invalid("fraction_solved over no records"));
    }
    Ok(hits as f64 / total as f64)
}

/// Time-to-solution point estimate with a bootstrap interval.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TtsEstimate {
    /// median(tau) * r99(p50), seconds.
    pub tts: f64,
    /// 2.5 / 97.5 bootstrap percentiles of the TTS distribution.
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Raw solved fraction of the record.
    pub p_hat: f64,
    /// Median of the bootstrap distribution of the solved fraction.
    pub p_median: f64,
    pub n_runs: usize,
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    debug_assert!(n > 0);
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn sorted_copy(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// Linear-interpolation percentile of a sorted slice, q in [0, 1].
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    debug_assert!(n > 0);
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = pos - lo as f64;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    }
}

/// Bootstrapped time-to-solution for one record.
///
/// Point estimate: median(tau) * r99(p50), where p50 is the median of the
/// bootstrap distribution of the solved fraction over
/// [`BOOTSTRAP_RESAMPLES`] resamples of the per-run success indicators
/// (taus resampled jointly). Requires a solved fraction of at least 0.5;
/// below that the estimate is declared not estimable and callers should
/// report the solved fraction and residuals instead. Resamples with no
/// successes contribute an infinite TTS to the upper tail. The bootstrap
/// is fully determined by `bootstrap_seed`.
pub fn tts(rec: &BenchmarkRecord, tol: f64, bootstrap_seed: u64) -> Result<TtsEstimate> {
    let n = rec.runs.len();
    if n == 0 {
        return Err(Error::invalid("TTS of an empty record"));
    }
    let solved: Vec<bool> =
        rec.runs.iter().map(|r| is_solved(r.best_energy, rec.planted_energy, tol)).collect();
    let taus: Vec<f64> = rec.runs.iter().map(|r| r.tau).collect();
    if taus.iter().any(|&t| !(t >= 0.0)) {
        return Err(Error::invalid("run times must be non-negative"));
    }
    let p_hat = solved.iter().filter(|&&s| s).count() as f64 / n as f64;
    if p_hat < 0.5 {
        return Err(Error::invalid(format!(
            "TTS not estimable: solved fraction {p_hat:.3} < 0.5; report fraction and residuals"
        )));
    }

    let mut rng = rng::stream(bootstrap_seed, &[]);
    let mut p_boot = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let mut tts_boot = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let mut tau_sample = vec![0.0f64; n];
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let mut hits = 0usize;
        for slot in tau_sample.iter_mut() {
            let idx = rand::Rng::random_range(&mut rng, 0..n);
            if solved[idx] {
                hits += 1;
            }
            *slot = taus[idx];
        }
        let p_b = hits as f64 / n as f64;
        p_boot.push(p_b);
        tau_sample.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let tts_b = if p_b > 0.0 { median(&tau_sample) * r99(p_b)? } else { f64::INFINITY };
        tts_boot.push(tts_b);
    }
    p_boot.sort_by(|a, b| a.partial_cmp(b).unwrap());
    tts_boot.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let p_median = median(&p_boot);
    let tau_median = median(&sorted_copy(&taus));
    let tts = tau_median * r99(p_median)?;
    Ok(TtsEstimate {
        tts,
        ci_lo: percentile(&tts_boot, 0.025),
        ci_hi: percentile(&tts_boot, 0.975),
        p_hat,
        p_median,
        n_runs: n,
    })
}

/// Least-squares fit of log10(TTS) = alpha + beta * N over the largest
/// problem sizes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingFit {
    pub alpha: f64,
    pub beta: f64,
    /// Standard error of `beta` from the regression covariance.
    pub beta_stderr: f64,
    /// Sizes used in the fit, ascending.
    pub sizes: Vec<usize>,
}

/// Fit the exponential-scaling trend through `(N, TTS)` points, using the
/// `use_largest` largest sizes (>= 3 required so the slope has an error
/// bar). TTS values must be positive and finite.
pub fn fit_scaling(points: &[(usize, f64)], use_largest: usize) -> Result<ScalingFit> {
    if use_largest < 3 {
        return Err(Error::invalid("scaling fit needs at least 3 points"));
    }
    if points.len() < use_largest {
        return Err(Error::invalid(format!(
            "scaling fit over {} points, need {use_largest}",
            points.len()
        )));
    }
    for &(_, t) in points {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::invalid(format!("scaling fit requires positive finite TTS, got {t}")));
        }
    }
    let mut pts = points.to_vec();
    pts.sort_by_key(|&(n, _)| n);
    let used = &pts[pts.len() - use_largest..];
    let m = used.len() as f64;
    let xs: Vec<f64> = used.iter().map(|&(n, _)| n as f64).collect();
    let ys: Vec<f64> = used.iter().map(|&(_, t)| t.log10()).collect();
    let x_mean = xs.iter().sum::<f64>() / m;
    let y_mean = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("scaling fit requires distinct sizes"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - x_mean) * (y - y_mean)).sum();
    let beta = sxy / sxx;
    let alpha = y_mean - beta * x_mean;
    let ssr: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - (alpha + beta * x)).powi(2)).sum();
    let beta_stderr = (ssr / (m - 2.0) / sxx).sqrt();
    Ok(ScalingFit { alpha, beta, beta_stderr, sizes: used.iter().map(|&(n, _)| n).collect() })
}
