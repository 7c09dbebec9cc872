//! Monte Carlo solvers: simulated annealing, parallel tempering, and
//! population annealing with family-entropy diagnostics.
//!
//! All solvers operate on spin polynomials and share one incremental
//! evaluation engine ([`Walker`]): per-term value caches make a single
//! spin flip O(terms incident to the variable) instead of O(all terms).
//! Every run is reproducible from its seed; replica- and epoch-level
//! randomness is derived through [`crate::rng::derive`] so results do
//! not depend on scheduling.

use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::incidence::IncidenceIndex;
use crate::poly::{Configuration, Domain, Polynomial};
use crate::{rng, stats, Error, Result};

/// Tolerance for "reached the target energy": relative with an absolute
/// floor, matching the solved criterion used by the metrics layer.
fn reaches(energy: f64, target: f64) -> bool {
    energy <= target + (1e-9 * target.abs()).max(1e-6)
}

// ---------------------------------------------------------------------------
// Annealing schedules

/// Inverse-temperature schedule for annealing-style solvers.
///
/// Either linear in beta or geometric in temperature; both expose the
/// same `beta(step)` view. Step 0 is the hot end, step `steps-1` the
/// cold end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Schedule {
    LinearBeta { beta_start: f64, beta_end: f64, steps: usize },
    GeometricTemperature { t_start: f64, t_end: f64, steps: usize },
}

impl Schedule {
    /// Linear ramp in beta. Requires beta_start < beta_end, beta_start >= 0,
    /// steps >= 2.
    pub fn linear_beta(beta_start: f64, beta_end: f64, steps: usize) -> Result<Self> {
        if !beta_start.is_finite() || !beta_end.is_finite() || beta_start < 0.0 {
            return Err(Error::invalid("schedule betas must be finite and non-negative"));
        }
        if beta_start >= beta_end {
            return Err(Error::invalid("schedule requires beta_start < beta_end"));
        }
        if steps < 2 {
            return Err(Error::invalid("schedule requires at least 2 steps"));
        }
        Ok(Schedule::LinearBeta { beta_start, beta_end, steps })
    }

    /// Geometric ramp in temperature from `t_start` (hot) down to `t_end`
    /// (cold). Requires t_start > t_end > 0, steps >= 2.
    pub fn geometric_temperature(t_start: f64, t_end: f64, steps: usize) -> Result<Self> {
        if !t_start.is_finite() || !t_end.is_finite() || t_end <= 0.0 {
            return Err(Error::invalid("schedule temperatures must be finite and positive"));
        }
        if t_start <= t_end {
            return Err(Error::invalid("schedule requires t_start > t_end"));
        }
        if steps < 2 {
            return Err(Error::invalid("schedule requires at least 2 steps"));
        }
        Ok(Schedule::GeometricTemperature { t_start, t_end, steps })
    }

    /// Default annealing ramp: beta 0 -> 20, 100 steps. Larger instances
    /// benefit from 300 steps; callers choose.
    pub fn default_anneal() -> Self {
        Schedule::LinearBeta { beta_start: 0.0, beta_end: 20.0, steps: 100 }
    }

    pub fn steps(&self) -> usize {
        match *self {
            Schedule::LinearBeta { steps, .. } => steps,
            Schedule::GeometricTemperature { steps, .. } => steps,
        }
    }

    /// Inverse temperature at `step` (0-based, < steps).
    pub fn beta(&self, step: usize) -> f64 {
        let frac = step as f64 / (self.steps() - 1) as f64;
        match *self {
            Schedule::LinearBeta { beta_start, beta_end, .. } => {
                beta_start + (beta_end - beta_start) * frac
            }
            Schedule::GeometricTemperature { t_start, t_end, .. } => {
                1.0 / (t_start * (t_end / t_start).powf(frac))
            }
        }
    }

    pub fn beta_end(&self) -> f64 {
        self.beta(self.steps() - 1)
    }

    /// Compact one-token description for run records.
    pub fn describe(&self) -> String {
        match *self {
            Schedule::LinearBeta { beta_start, beta_end, steps } => {
                format!("linear_beta({beta_start},{beta_end},{steps})")
            }
            Schedule::GeometricTemperature { t_start, t_end, steps } => {
                format!("geometric_t({t_start},{t_end},{steps})")
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Incremental Metropolis walker

/// One Metropolis chain over a spin polynomial with cached term values.
///
/// `term_vals[t]` holds c_t * prod(s_v) for term t, so a flip of v negates
/// exactly the caches of terms incident to v (exact in floating point) and
/// the energy delta is -2 * sum of those caches. The running energy
/// accumulates rounding from repeated deltas; [`Walker::refresh_energy`]
/// recomputes it from scratch and is called whenever a new best is recorded.
#[derive(Debug, Clone)]
pub struct Walker<'a> {
    index: &'a IncidenceIndex,
    values: Vec<i8>,
    term_vals: Vec<f64>,
    energy: f64,
}

impl<'a> Walker<'a> {
    pub fn new(index: &'a IncidenceIndex, init: &Configuration) -> Result<Self> {
        if index.domain() != Domain::Spin {
            return Err(Error::DomainMismatch { expected: Domain::Spin, got: index.domain() });
        }
        if init.domain() != Domain::Spin {
            return Err(Error::DomainMismatch { expected: Domain::Spin, got: init.domain() });
        }
        if init.len() != index.n() {
            return Err(Error::LengthMismatch { expected: index.n(), got: init.len() });
        }
        let values = init.values().to_vec();
        let mut w = Walker { index, values, term_vals: vec![0.0; index.num_terms()], energy: 0.0 };
        w.rebuild_caches();
        Ok(w)
    }

    /// Fresh walker with uniformly random spins drawn from `rng`.
    pub fn random(index: &'a IncidenceIndex, rng: &mut ChaCha8Rng) -> Result<Self> {
        if index.domain() != Domain::Spin {
            return Err(Error::DomainMismatch { expected: Domain::Spin, got: index.domain() });
        }
        let values: Vec<i8> =
            (0..index.n()).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
        let mut w = Walker { index, values, term_vals: vec![0.0; index.num_terms()], energy: 0.0 };
        w.rebuild_caches();
        Ok(w)
    }

    fn rebuild_caches(&mut self) {
        for t in 0..self.index.num_terms() {
            let mut prod = self.index.term_coeff(t);
            for &v in self.index.term_vars(t) {
                prod *= self.values[v as usize] as f64;
            }
            self.term_vals[t] = prod;
        }
        self.energy = self.index.constant() + self.term_vals.iter().sum::<f64>();
    }

    pub fn n(&self) -> usize {
        self.index.n()
    }

    /// Current energy (incrementally maintained; may carry rounding drift).
    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn config(&self) -> Configuration {
        Configuration::new(Domain::Spin, self.values.clone()).expect("walker values are spins")
    }

    /// Energy change if variable `v` were flipped.
    pub fn flip_delta(&self, v: usize) -> f64 {
        let mut s = 0.0;
        for &t in self.index.incident(v) {
            s += self.term_vals[t as usize];
        }
        -2.0 * s
    }

    /// Flip `v`: negate its spin and the caches of incident terms.
    pub fn flip(&mut self, v: usize) {
        let mut s = 0.0;
        for &t in self.index.incident(v) {
            let tv = &mut self.term_vals[t as usize];
            s += *tv;
            *tv = -*tv;
        }
        self.values[v] = -self.values[v];
        self.energy += -2.0 * s;
    }

    /// One Metropolis sweep at inverse temperature `beta`, visiting
    /// variables in index order. Returns the number of accepted flips.
    ///
    /// Zero-cost flips are taken with probability 1/2 rather than 1:
    /// with a deterministic scan order, always accepting them turns
    /// degenerate plateaus into lock-step cycles (domain walls on a ring
    /// translate forever without meeting). Detailed balance is unaffected
    /// since the forward and reverse move have equal acceptance.
    pub fn sweep(&mut self, beta: f64, rng: &mut ChaCha8Rng) -> usize {
        let mut accepted = 0;
        for v in 0..self.values.len() {
            let delta = self.flip_delta(v);
            let take = if delta < 0.0 {
                true
            } else if delta == 0.0 {
                rng.random::<bool>()
            } else {
                rng.random::<f64>() < (-beta * delta).exp()
            };
            if take {
                self.flip(v);
                accepted += 1;
            }
        }
        accepted
    }

    /// Exact recompute of the energy from current values; resets drift.
    pub fn refresh_energy(&mut self) -> f64 {
        self.energy = self.index.evaluate_values(&self.values);
        self.energy
    }
}

// ---------------------------------------------------------------------------
// Run records

/// Outcome of one solver run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveRun {
    pub best_energy: f64,
    pub best_config: Configuration,
    /// Total wall time in seconds, setup included.
    pub tau: f64,
    pub timeout_s: Option<f64>,
    pub timed_out: bool,
    pub seed: u64,
    /// Total Metropolis sweeps performed (summed over replicas for PT).
    pub sweeps: u64,
    /// Compact solver-parameter record, e.g. for result rows.
    pub params: String,
    /// Whether the supplied target energy was reached; None if no target.
    pub hit_planted: Option<bool>,
}

/// Shared bookkeeping: track the best configuration seen, with an exact
/// energy recompute on every improvement so drift never leaks into results.
struct BestTracker {
    energy: f64,
    values: Vec<i8>,
}

impl BestTracker {
    fn new(walker: &mut Walker) -> Self {
        let e = walker.refresh_energy();
        BestTracker { energy: e, values: walker.values().to_vec() }
    }

    /// Returns true if the walker improved on the stored best.
    fn observe(&mut self, walker: &mut Walker) -> bool {
        if walker.energy() < self.energy {
            let exact = walker.refresh_energy();
            if exact < self.energy {
                self.energy = exact;
                self.values.clear();
                self.values.extend_from_slice(walker.values());
                return true;
            }
        }
        false
    }

    fn into_config(self) -> Configuration {
        Configuration::new(Domain::Spin, self.values).expect("best values are spins")
    }
}

fn check_solvable(poly: &Polynomial) -> Result<()> {
    if poly.domain() != Domain::Spin {
        return Err(Error::DomainMismatch { expected: Domain::Spin, got: poly.domain() });
    }
    if poly.num_vars() == 0 {
        return Err(Error::invalid("solver requires at least one variable"));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Simulated annealing

/// Single-chain simulated annealing over `schedule`.
///
/// Runs `sweeps_per_step` Metropolis sweeps at each schedule step. Stops
/// early once `target` is reached; `timeout_s`, when given, bounds the
/// annealing loop and the run returns best-so-far with `timed_out` set.
pub fn simulated_annealing(
    poly: &Polynomial,
    schedule: &Schedule,
    sweeps_per_step: usize,
    seed: u64,
    target: Option<f64>,
    timeout_s: Option<f64>,
) -> Result<SolveRun> {
    check_solvable(poly)?;
    if sweeps_per_step == 0 {
        return Err(Error::invalid("sweeps_per_step must be >= 1"));
    }
    let start = Instant::now();
    let index = IncidenceIndex::build(poly);
    let mut rng = rng::stream(seed, &[]);
    let mut walker = Walker::random(&index, &mut rng)?;
    let mut best = BestTracker::new(&mut walker);
    let mut sweeps = 0u64;
    let mut timed_out = false;
    let mut hit = target.map(|t| reaches(best.energy, t));

    'anneal: for step in 0..schedule.steps() {
        let beta = schedule.beta(step);
        for _ in 0..sweeps_per_step {
            walker.sweep(beta, &mut rng);
            sweeps += 1;
            if best.observe(&mut walker) {
                if let Some(t) = target {
                    if reaches(best.energy, t) {
                        hit = Some(true);
                        break 'anneal;
                    }
                }
            }
            if let Some(limit) = timeout_s {
                if start.elapsed().as_secs_f64() > limit {
                    timed_out = true;
                    break 'anneal;
                }
            }
        }
    }

    let best_energy = best.energy;
    let best_config = best.into_config();
    debug_assert!((poly.evaluate(&best_config).unwrap() - best_energy).abs() <= 1e-9);
    Ok(SolveRun {
        best_energy,
        best_config,
        tau: start.elapsed().as_secs_f64(),
        timeout_s,
        timed_out,
        seed,
        sweeps,
        params: format!("solver=sa schedule={} sweeps_per_step={sweeps_per_step}", schedule.describe()),
        hit_planted: hit,
    })
}

// ---------------------------------------------------------------------------
// Parallel tempering

/// Replica count heuristic: 2 * ceil(log2 n), clamped to [8, 64].
pub fn default_replica_count(n: usize) -> usize {
    let lg = (usize::BITS - n.next_power_of_two().leading_zeros() - 1) as usize;
    (2 * lg).clamp(8, 64)
}

/// Temperature ladder endpoints tuned to the coupler structure.
///
/// The hot end is chosen so a typical worst-case flip (twice the mean
/// per-variable sum of |coefficients|) is accepted with probability 0.8;
/// the cold end so the minimal excitation (twice the smallest nonzero
/// |coefficient|) is accepted with probability at most 0.01. For unit
/// couplers this gives t_min = 2/ln(100). Errors on polynomials with no
/// non-constant terms. The hot end is floored at twice the cold end so
/// the ladder is always ordered.
pub fn auto_tune_ladder(poly: &Polynomial) -> Result<(f64, f64)> {
    check_solvable(poly)?;
    let mut c_min = f64::INFINITY;
    for (_, c) in poly.terms() {
        if c != 0.0 {
            c_min = c_min.min(c.abs());
        }
    }
    if !c_min.is_finite() {
        return Err(Error::invalid("cannot tune a ladder for a constant polynomial"));
    }
    let index = IncidenceIndex::build(poly);
    let mean_incident =
        (0..index.n()).map(|v| index.incident_abs_sum(v)).sum::<f64>() / index.n() as f64;
    let t_min = 2.0 * c_min / 100f64.ln();
    let t_max = (2.0 * mean_incident / -(0.8f64.ln())).max(2.0 * t_min);
    Ok((t_min, t_max))
}

/// Exchange acceptance for adjacent replicas: min(1, exp(dbeta * de)).
/// Equal temperatures give exactly 1.
fn exchange_probability(delta_beta: f64, delta_energy: f64) -> f64 {
    (delta_beta * delta_energy).exp().min(1.0)
}

/// Parallel tempering on a geometric temperature ladder.
///
/// `n_replicas` chains run at temperatures spaced geometrically over
/// [t_min, t_max]; after every `sweeps_between_exchanges` sweeps, adjacent
/// replicas attempt a configuration swap with acceptance
/// min(1, exp(dbeta * dE)), alternating pair parity per epoch. The epoch
/// loop runs until `timeout_s` of loop time (setup excluded from the
/// bound, included in `tau`) or until `target` is reached. Best energy is
/// tracked across all replicas. Each replica draws from a private stream
/// derived from (seed, replica, epoch); exchange decisions come from a
/// coordinator stream, so the outcome is independent of worker scheduling.
pub fn parallel_tempering(
    poly: &Polynomial,
    n_replicas: usize,
    t_min: f64,
    t_max: f64,
    sweeps_between_exchanges: usize,
    timeout_s: f64,
    seed: u64,
    target: Option<f64>,
) -> Result<SolveRun> {
    check_solvable(poly)?;
    if n_replicas < 2 {
        return Err(Error::invalid("parallel tempering requires at least 2 replicas"));
    }
    if !(t_min > 0.0 && t_min < t_max && t_max.is_finite()) {
        return Err(Error::invalid("parallel tempering requires 0 < t_min < t_max"));
    }
    if sweeps_between_exchanges == 0 {
        return Err(Error::invalid("sweeps_between_exchanges must be >= 1"));
    }
    if !(timeout_s > 0.0) {
        return Err(Error::invalid("timeout_s must be positive"));
    }

    let start = Instant::now();
    let index = IncidenceIndex::build(poly);
    // replica 0 hottest; betas increase with the index
    let betas: Vec<f64> = (0..n_replicas)
        .map(|i| {
            let frac = i as f64 / (n_replicas - 1) as f64;
            1.0 / (t_max * (t_min / t_max).powf(frac))
        })
        .collect();
    let mut walkers: Vec<Walker> = Vec::with_capacity(n_replicas);
    for i in 0..n_replicas {
        let mut init_rng = rng::stream(seed, &[0, i as u64]);
        walkers.push(Walker::random(&index, &mut init_rng)?);
    }
    let mut best = BestTracker::new(&mut walkers[0]);
    for w in walkers.iter_mut() {
        best.observe(w);
    }
    let mut sweeps = 0u64;
    let mut timed_out = false;
    let mut hit = target.map(|t| reaches(best.energy, t));
    let loop_start = Instant::now();

    'epochs: for epoch in 0u64.. {
        for (i, walker) in walkers.iter_mut().enumerate() {
            let mut wrng = rng::stream(seed, &[1, i as u64, epoch]);
            for _ in 0..sweeps_between_exchanges {
                walker.sweep(betas[i], &mut wrng);
                sweeps += 1;
            }
            if best.observe(walker) {
                if let Some(t) = target {
                    if reaches(best.energy, t) {
                        hit = Some(true);
                        break 'epochs;
                    }
                }
            }
            if loop_start.elapsed().as_secs_f64() > timeout_s {
                timed_out = true;
                break 'epochs;
            }
        }
        let mut xrng = rng::stream(seed, &[2, epoch]);
        let first = (epoch % 2) as usize;
        for i in (first..n_replicas.saturating_sub(1)).step_by(2) {
            let de = walkers[i + 1].energy() - walkers[i].energy();
            let db = betas[i + 1] - betas[i];
            if xrng.random::<f64>() < exchange_probability(db, de) {
                walkers.swap(i, i + 1);
            }
        }
    }

    let best_energy = best.energy;
    let best_config = best.into_config();
    debug_assert!((poly.evaluate(&best_config).unwrap() - best_energy).abs() <= 1e-9);
    Ok(SolveRun {
        best_energy,
        best_config,
        tau: start.elapsed().as_secs_f64(),
        timeout_s: Some(timeout_s),
        timed_out,
        seed,
        sweeps,
        params: format!(
            "solver=pt replicas={n_replicas} t_min={t_min:.6} t_max={t_max:.6} sweeps_between_exchanges={sweeps_between_exchanges}"
        ),
        hit_planted: hit,
    })
}

// ---------------------------------------------------------------------------
// Population annealing

/// Shannon entropy of a family-fraction vector (natural log).
///
/// Fractions must be non-negative and sum to 1 within 1e-9; zero entries
/// contribute nothing.
pub fn family_entropy(fractions: &[f64]) -> Result<f64> {
    let mut sum = 0.0;
    for &f in fractions {
        if !(f >= 0.0) {
            return Err(Error::invalid("family fractions must be non-negative"));
        }
        sum += f;
    }
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("family fractions must sum to 1, got {sum}")));
    }
    // + 0.0 turns the -0.0 of a single-family vector into plain zero
    Ok(-fractions.iter().filter(|&&f| f > 0.0).map(|&f| f * f.ln()).sum::<f64>() + 0.0)
}

/// Systematic (stochastic universal) resampling: expected counts are
/// proportional to `weights`, realized counts always sum to exactly `r`.
fn systematic_resample(weights: &[f64], r: usize, rng: &mut ChaCha8Rng) -> Vec<u32> {
    let total: f64 = weights.iter().sum();
    debug_assert!(total > 0.0);
    let stride = total / r as f64;
    let mut pointer = rng.random::<f64>() * stride;
    let mut counts = vec![0u32; weights.len()];
    let mut cum = 0.0;
    let mut drawn = 0usize;
    for (j, &w) in weights.iter().enumerate() {
        cum += w;
        while drawn < r && pointer < cum {
            counts[j] += 1;
            drawn += 1;
            pointer += stride;
        }
    }
    // float edge: park any undrawn remainder on the last positive weight
    if drawn < r {
        for j in (0..weights.len()).rev() {
            if weights[j] > 0.0 {
                counts[j] += (r - drawn) as u32;
                break;
            }
        }
    }
    counts
}

/// Per-step population annealing statistics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PamcStep {
    pub beta: f64,
    pub mean_energy: f64,
    /// Nonzero family fractions, descending. Always sums to 1.
    pub fractions: Vec<f64>,
    pub family_entropy: f64,
    pub surviving_families: usize,
}

/// One population annealing run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PamcRun {
    pub r: usize,
    pub seed: u64,
    pub steps: Vec<PamcStep>,
    /// rho_hat_s = R / exp(S_f) at the final beta.
    pub rho_s_final: f64,
}

/// Population annealing with family tracking.
///
/// Starts R replicas at infinite temperature, each its own family. At
/// every schedule step the population is resampled with weights
/// exp(-dbeta * E) (systematic resampling, population size conserved
/// exactly), then each replica runs `sweeps_per_step` Metropolis sweeps
/// at the new beta. The polynomial must be normalized to max |coefficient|
/// = 1 (see [`crate::stats::normalize`]) so one schedule fits all
/// instances; rho_hat_s = R/exp(S_f) estimates how many independent
/// replicas the run was worth at the final beta.
pub fn population_annealing(
    poly: &Polynomial,
    r: usize,
    schedule: &Schedule,
    sweeps_per_step: usize,
    seed: u64,
) -> Result<PamcRun> {
    check_solvable(poly)?;
    if (poly.max_abs_coeff() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("population annealing expects a normalized polynomial"));
    }
    if r < 2 {
        return Err(Error::invalid("population size must be >= 2"));
    }
    if sweeps_per_step == 0 {
        return Err(Error::invalid("sweeps_per_step must be >= 1"));
    }

    let index = IncidenceIndex::build(poly);
    let mut init_rng = rng::stream(seed, &[0]);
    let mut walkers: Vec<Walker> = (0..r)
        .map(|_| Walker::random(&index, &mut init_rng))
        .collect::<Result<_>>()?;
    let mut families: Vec<u32> = (0..r as u32).collect();
    let mut resample_rng = rng::stream(seed, &[3]);
    let mut steps = Vec::with_capacity(schedule.steps());
    let mut beta_prev = 0.0;

    for step in 0..schedule.steps() {
        let beta = schedule.beta(step);
        let dbeta = beta - beta_prev;
        if dbeta > 0.0 {
            // weights relative to the minimum energy for overflow safety
            let energies: Vec<f64> = walkers.iter_mut().map(|w| w.refresh_energy()).collect();
            let e_min = energies.iter().cloned().fold(f64::INFINITY, f64::min);
            let weights: Vec<f64> =
                energies.iter().map(|&e| (-dbeta * (e - e_min)).exp()).collect();
            let counts = systematic_resample(&weights, r, &mut resample_rng);
            let mut next_walkers = Vec::with_capacity(r);
            let mut next_families = Vec::with_capacity(r);
            for (j, &c) in counts.iter().enumerate() {
                for _ in 0..c {
                    next_walkers.push(walkers[j].clone());
                    next_families.push(families[j]);
                }
            }
            walkers = next_walkers;
            families = next_families;
        }
        for (i, walker) in walkers.iter_mut().enumerate() {
            let mut wrng = rng::stream(seed, &[1, i as u64, step as u64]);
            for _ in 0..sweeps_per_step {
                walker.sweep(beta, &mut wrng);
            }
        }

        let mean_energy =
            walkers.iter_mut().map(|w| w.refresh_energy()).sum::<f64>() / r as f64;
        let mut counts = vec![0u32; r];
        for &f in &families {
            counts[f as usize] += 1;
        }
        let mut fractions: Vec<f64> =
            counts.iter().filter(|&&c| c > 0).map(|&c| c as f64 / r as f64).collect();
        fractions.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let surviving = fractions.len();
        let s_f = family_entropy(&fractions)?;
        steps.push(PamcStep {
            beta,
            mean_energy,
            fractions,
            family_entropy: s_f,
            surviving_families: surviving,
        });
        beta_prev = beta;
    }

    let s_final = steps.last().expect("schedule has steps").family_entropy;
    let rho_s_final = r as f64 / s_final.exp();
    Ok(PamcRun { r, seed, steps, rho_s_final })
}

/// Protocol for the rho_s convergence study: population doubling with
/// repeated restarts at each size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoProtocol {
    pub r0: usize,
    pub max_r: usize,
    pub restarts: usize,
    pub schedule: Schedule,
    pub sweeps_per_step: usize,
    /// Optional wall-clock budget; exceeding it ends the study unconverged.
    pub time_budget_s: Option<f64>,
}

impl Default for RhoProtocol {
    fn default() -> Self {
        RhoProtocol {
            r0: 8,
            max_r: 1024,
            restarts: 100,
            schedule: Schedule::default_anneal(),
            sweeps_per_step: 5,
            time_budget_s: None,
        }
    }
}

/// rho_s statistics at one population size.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RhoLevel {
    pub r: usize,
    pub mean: f64,
    pub std: f64,
}

/// Result of the doubling protocol.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PamcEstimate {
    /// Final population size examined.
    pub r_final: usize,
    /// Mean and sample std of rho_hat_s over restarts at `r_final`.
    pub rho_s_mean: f64,
    pub rho_s_std: f64,
    pub restarts: usize,
    /// True if two consecutive population sizes agreed within one
    /// combined standard error.
    pub converged: bool,
    pub trace: Vec<RhoLevel>,
}

/// Doubling protocol for a converged rho_s estimate.
///
/// Normalizes the polynomial, then runs `restarts` independent population
/// annealing runs at R = r0, 2*r0, ..., up to max_r. Stops as soon as two
/// consecutive sizes produce mean rho_hat_s values within one combined
/// standard error of each other; otherwise returns the full trace with
/// `converged` false.
pub fn rho_s_converged(poly: &Polynomial, protocol: &RhoProtocol, seed: u64) -> Result<PamcEstimate> {
    if protocol.r0 < 2 {
        return Err(Error::invalid("protocol requires r0 >= 2"));
    }
    if protocol.max_r < protocol.r0 {
        return Err(Error::invalid("protocol requires max_r >= r0"));
    }
    if protocol.restarts < 2 {
        return Err(Error::invalid("protocol requires at least 2 restarts"));
    }
    let (norm, _) = stats::normalize(poly)?;
    let start = Instant::now();
    let mut trace: Vec<RhoLevel> = Vec::new();
    let mut converged = false;
    let mut level = 0u64;
    let mut r = protocol.r0;
    loop {
        let mut rhos = Vec::with_capacity(protocol.restarts);
        for restart in 0..protocol.restarts {
            let run_seed = rng::derive(seed, &[level, restart as u64]);
            let run =
                population_annealing(&norm, r, &protocol.schedule, protocol.sweeps_per_step, run_seed)?;
            rhos.push(run.rho_s_final);
        }
        let n = rhos.len() as f64;
        let mean = rhos.iter().sum::<f64>() / n;
        let var = rhos.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let std = var.sqrt();
        trace.push(RhoLevel { r, mean, std });

        if trace.len() >= 2 {
            let prev = &trace[trace.len() - 2];
            let se_prev = prev.std / (protocol.restarts as f64).sqrt();
            let se_cur = std / (protocol.restarts as f64).sqrt();
            let combined = (se_prev * se_prev + se_cur * se_cur).sqrt();
            if (mean - prev.mean).abs() <= combined {
                converged = true;
                break;
            }
        }
        let out_of_time = protocol
            .time_budget_s
            .map(|b| start.elapsed().as_secs_f64() > b)
            .unwrap_or(false);
        if r * 2 > protocol.max_r || out_of_time {
            break;
        }
        r *= 2;
        level += 1;
    }
    let last = trace.last().expect("at least one level");
    Ok(PamcEstimate {
        r_final: last.r,
        rho_s_mean: last.mean,
        rho_s_std: last.std,
        restarts: protocol.restarts,
        converged,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Domain;

    fn spin_poly(n: usize, terms: &[(&[u32], f64)]) -> Polynomial {
        let mut p = Polynomial::new(Domain::Spin, n);
        for (vars, c) in terms {
            p.add_term(vars, *c).unwrap();
        }
        p
    }

    fn ring(n: usize, j: f64) -> Polynomial {
        let mut p = Polynomial::new(Domain::Spin, n);
        for v in 0..n as u32 {
            p.add_term(&[v, (v + 1) % n as u32], -j).unwrap();
        }
        p
    }

    #[test]
    fn schedule_endpoints_and_validation() {
        let s = Schedule::linear_beta(0.0, 20.0, 100).unwrap();
        assert_eq!(s.beta(0), 0.0);
        assert_eq!(s.beta(99), 20.0);
        assert!(s.beta(50) > s.beta(49));

        let g = Schedule::geometric_temperature(10.0, 0.5, 5).unwrap();
        assert!((g.beta(0) - 0.1).abs() < 1e-12);
        assert!((g.beta(4) - 2.0).abs() < 1e-12);
        for i in 1..5 {
            assert!(g.beta(i) > g.beta(i - 1));
        }

        assert!(Schedule::linear_beta(5.0, 5.0, 10).is_err());
        assert!(Schedule::linear_beta(0.0, 20.0, 1).is_err());
        assert!(Schedule::geometric_temperature(0.5, 10.0, 5).is_err());
        assert!(Schedule::geometric_temperature(10.0, 0.0, 5).is_err());
    }

    #[test]
    fn walker_deltas_match_full_evaluation() {
        let mut rng = rng::stream(7, &[]);
        let mut p = Polynomial::new(Domain::Spin, 8);
        for _ in 0..20 {
            let a = rng.random_range(0..8u32);
            let b = rng.random_range(0..8u32);
            let c = rng.random_range(0..8u32);
            let mut vars: Vec<u32> = vec![a, b, c];
            vars.sort_unstable();
            vars.dedup();
            let coeff = (rng.random_range(-4i32..=4) as f64) / 2.0;
            p.add_term(&vars, coeff).unwrap();
        }
        let index = IncidenceIndex::build(&p);
        let mut w = Walker::random(&index, &mut rng).unwrap();
        for _ in 0..100 {
            let v = rng.random_range(0..8usize);
            let before = p.evaluate(&w.config()).unwrap();
            let delta = w.flip_delta(v);
            w.flip(v);
            let after = p.evaluate(&w.config()).unwrap();
            assert!((after - before - delta).abs() < 1e-9);
            assert!((w.energy() - after).abs() < 1e-9);
        }
    }

    #[test]
    fn sa_solves_single_spin_field() {
        let p = spin_poly(1, &[(&[0], -2.5)]);
        let run = simulated_annealing(&p, &Schedule::default_anneal(), 2, 1, Some(-2.5), None).unwrap();
        assert_eq!(run.best_energy, -2.5);
        assert_eq!(run.best_config.values(), &[1]);
        assert_eq!(run.hit_planted, Some(true));
        assert!(!run.timed_out);
        assert!(run.tau >= 0.0);
    }

    #[test]
    fn sa_finds_ring_ground_state() {
        let p = ring(8, 1.0);
        let run = simulated_annealing(&p, &Schedule::default_anneal(), 5, 3, Some(-8.0), None).unwrap();
        assert_eq!(run.best_energy, -8.0);
        assert_eq!(run.hit_planted, Some(true));
        let v = run.best_config.values();
        assert!(v.iter().all(|&s| s == v[0]));
    }

    #[test]
    fn sa_is_deterministic_in_seed() {
        let p = ring(12, 1.0);
        let s = Schedule::linear_beta(0.0, 4.0, 30).unwrap();
        let a = simulated_annealing(&p, &s, 2, 42, None, None).unwrap();
        let b = simulated_annealing(&p, &s, 2, 42, None, None).unwrap();
        assert_eq!(a.best_energy, b.best_energy);
        assert_eq!(a.best_config, b.best_config);
        assert_eq!(a.sweeps, b.sweeps);
    }

    #[test]
    fn sa_rejects_boolean_and_empty_inputs() {
        let b = Polynomial::new(Domain::Bool, 3);
        assert!(simulated_annealing(&b, &Schedule::default_anneal(), 1, 0, None, None).is_err());
        let empty = Polynomial::new(Domain::Spin, 0);
        assert!(simulated_annealing(&empty, &Schedule::default_anneal(), 1, 0, None, None).is_err());
        let p = ring(4, 1.0);
        assert!(simulated_annealing(&p, &Schedule::default_anneal(), 0, 0, None, None).is_err());
    }

    #[test]
    fn metropolis_matches_gibbs_on_two_spins() {
        // H = -s0*s1 at beta = 0.5; exact Gibbs: P(aligned) =
        // e^b / (2 e^b + 2 e^-b) per state. 10^6 single-flip steps,
        // occupancy sampled every 5 sweeps, compared at 3 sigma.
        let p = ring(2, 0.5); // wrap merges both edges: one term, coeff -1
        assert_eq!(p.num_terms(), 1);
        let index = IncidenceIndex::build(&p);
        let beta = 0.5;
        let mut rng = rng::stream(11, &[]);
        let mut w = Walker::random(&index, &mut rng).unwrap();
        let total_steps = 1_000_000usize;
        let sweeps = total_steps / 2;
        let mut counts = [0u64; 4];
        let mut samples = 0u64;
        for s in 0..sweeps {
            w.sweep(beta, &mut rng);
            if s % 5 == 4 {
                let v = w.values();
                let idx = ((v[0] > 0) as usize) << 1 | (v[1] > 0) as usize;
                counts[idx] += 1;
                samples += 1;
            }
        }
        let z = 2.0 * beta.exp() + 2.0 * (-beta).exp();
        for idx in 0..4 {
            let aligned = (idx == 0) || (idx == 3);
            let prob = if aligned { beta.exp() / z } else { (-beta).exp() / z };
            let mean = samples as f64 * prob;
            let sigma = (samples as f64 * prob * (1.0 - prob)).sqrt();
            let dev = (counts[idx] as f64 - mean).abs();
            assert!(
                dev <= 3.0 * sigma,
                "state {idx}: count {} expected {mean:.0} +- {sigma:.0}",
                counts[idx]
            );
        }
    }

    #[test]
    fn equal_temperature_exchange_is_certain() {
        assert_eq!(exchange_probability(0.0, 123.4), 1.0);
        assert_eq!(exchange_probability(0.0, -5.0), 1.0);
        // favorable swaps (colder replica has lower energy) are also certain
        assert_eq!(exchange_probability(2.0, 3.0), 1.0);
        assert!(exchange_probability(2.0, -3.0) < 1.0);
    }

    #[test]
    fn pt_finds_ring_ground_state() {
        let p = ring(16, 1.0);
        let run = parallel_tempering(&p, 8, 0.4, 5.0, 5, 10.0, 9, Some(-16.0)).unwrap();
        assert_eq!(run.best_energy, -16.0);
        assert_eq!(run.hit_planted, Some(true));
        assert!(!run.timed_out);
        assert!((p.evaluate(&run.best_config).unwrap() - run.best_energy).abs() < 1e-9);
    }

    #[test]
    fn pt_respects_timeout_and_reports_best_so_far() {
        let mut rng = rng::stream(5, &[]);
        let mut p = Polynomial::new(Domain::Spin, 24);
        for a in 0..24u32 {
            for b in (a + 1)..24 {
                if rng.random::<f64>() < 0.3 {
                    let j = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    p.add_term(&[a, b], j).unwrap();
                }
            }
        }
        let run = parallel_tempering(&p, 8, 0.4, 4.0, 2, 0.05, 1, None).unwrap();
        assert!(run.timed_out);
        assert!(run.hit_planted.is_none());
        assert!(run.tau >= 0.05);
        assert!((p.evaluate(&run.best_config).unwrap() - run.best_energy).abs() < 1e-9);
    }

    #[test]
    fn pt_is_deterministic_in_seed() {
        let p = ring(12, 1.0);
        let a = parallel_tempering(&p, 8, 0.4, 4.0, 2, 5.0, 21, Some(-12.0)).unwrap();
        let b = parallel_tempering(&p, 8, 0.4, 4.0, 2, 5.0, 21, Some(-12.0)).unwrap();
        assert_eq!(a.best_energy, b.best_energy);
        assert_eq!(a.best_config, b.best_config);
        assert_eq!(a.sweeps, b.sweeps);
    }

    #[test]
    fn pt_validates_arguments() {
        let p = ring(8, 1.0);
        assert!(parallel_tempering(&p, 1, 0.4, 4.0, 2, 1.0, 0, None).is_err());
        assert!(parallel_tempering(&p, 8, 4.0, 0.4, 2, 1.0, 0, None).is_err());
        assert!(parallel_tempering(&p, 8, 0.4, 4.0, 0, 1.0, 0, None).is_err());
        assert!(parallel_tempering(&p, 8, 0.4, 4.0, 2, 0.0, 0, None).is_err());
    }

    #[test]
    fn replica_count_heuristic() {
        assert_eq!(default_replica_count(16), 8);
        assert_eq!(default_replica_count(64), 12);
        assert_eq!(default_replica_count(144), 16);
        assert_eq!(default_replica_count(400), 18);
        assert_eq!(default_replica_count(2), 8);
        assert_eq!(default_replica_count(1 << 40), 64);
    }

    #[test]
    fn ladder_tuning_matches_hand_rules() {
        let p = ring(8, 1.0);
        let (t_min, t_max) = auto_tune_ladder(&p).unwrap();
        // minimal excitation 2*1, acceptance 0.01 at the cold end
        assert!((t_min - 2.0 / 100f64.ln()).abs() < 1e-12);
        // each spin sees two unit couplers: typical barrier 4
        assert!((t_max - 4.0 / -(0.8f64.ln())).abs() < 1e-12);
        assert!(t_min < t_max);

        let constant = Polynomial::new(Domain::Spin, 4);
        assert!(auto_tune_ladder(&constant).is_err());
    }

    #[test]
    fn family_entropy_identities() {
        assert_eq!(family_entropy(&[1.0]).unwrap(), 0.0);
        let r = 16;
        let uniform = vec![1.0 / r as f64; r];
        assert!((family_entropy(&uniform).unwrap() - (r as f64).ln()).abs() < 1e-12);
        let s = family_entropy(&[0.75, 0.25]).unwrap();
        assert!((s - 0.5623351446188083).abs() < 1e-12);
        // zero fractions contribute nothing
        assert!((family_entropy(&[0.5, 0.5, 0.0]).unwrap() - 2f64.ln()).abs() < 1e-12);
        assert!(family_entropy(&[0.5, 0.4]).is_err());
        assert!(family_entropy(&[1.5, -0.5]).is_err());
    }

    #[test]
    fn systematic_resampling_conserves_population() {
        let mut rng = rng::stream(2, &[]);
        for trial in 0..50 {
            let len = 2 + trial % 17;
            let weights: Vec<f64> = (0..len)
                .map(|_| if rng.random::<f64>() < 0.2 { 0.0 } else { rng.random::<f64>() })
                .collect();
            if weights.iter().sum::<f64>() == 0.0 {
                continue;
            }
            for r in [2usize, 8, 64, 333] {
                let counts = systematic_resample(&weights, r, &mut rng);
                assert_eq!(counts.iter().map(|&c| c as usize).sum::<usize>(), r);
                for (j, &c) in counts.iter().enumerate() {
                    if weights[j] == 0.0 {
                        assert_eq!(c, 0);
                    }
                }
            }
        }
        // one dominant weight takes everything
        let counts = systematic_resample(&[1e-12, 1.0, 1e-12], 64, &mut rng);
        assert!(counts[1] >= 63);
    }

    #[test]
    fn population_annealing_on_easy_ring() {
        let p = ring(8, 1.0); // already normalized: max |c| = 1
        let schedule = Schedule::linear_beta(0.0, 5.0, 40).unwrap();
        let run = population_annealing(&p, 64, &schedule, 3, 17).unwrap();
        assert_eq!(run.r, 64);
        assert_eq!(run.steps.len(), 40);
        for step in &run.steps {
            let total: f64 = step.fractions.iter().sum();
            assert!((total - 1.0).abs() < 1e-9);
            assert!(step.family_entropy >= 0.0);
            assert!(step.family_entropy <= (64f64).ln() + 1e-12);
            assert_eq!(step.surviving_families, step.fractions.len());
        }
        assert!(run.rho_s_final >= 1.0 && run.rho_s_final <= 64.0);
        // an 8-spin ferromagnet equilibrates instantly; families barely collapse
        assert!(run.rho_s_final < 8.0, "rho_s = {}", run.rho_s_final);
        // final population sits at the ground state
        let final_mean = run.steps.last().unwrap().mean_energy;
        assert!(final_mean < -7.5, "mean energy {final_mean}");
    }

    #[test]
    fn population_annealing_is_deterministic() {
        let p = ring(6, 1.0);
        let schedule = Schedule::linear_beta(0.0, 3.0, 15).unwrap();
        let a = population_annealing(&p, 16, &schedule, 2, 5).unwrap();
        let b = population_annealing(&p, 16, &schedule, 2, 5).unwrap();
        assert_eq!(a.rho_s_final, b.rho_s_final);
        for (x, y) in a.steps.iter().zip(&b.steps) {
            assert_eq!(x.mean_energy, y.mean_energy);
            assert_eq!(x.fractions, y.fractions);
        }
    }

    #[test]
    fn population_annealing_validates_inputs() {
        let mut p = ring(4, 1.0);
        let schedule = Schedule::default_anneal();
        assert!(population_annealing(&p, 1, &schedule, 1, 0).is_err());
        p.scale(3.0); // no longer normalized
        assert!(population_annealing(&p, 8, &schedule, 1, 0).is_err());
    }

    #[test]
    fn rho_s_protocol_converges_on_easy_ring() {
        let p = ring(8, 1.0);
        let protocol = RhoProtocol {
            r0: 8,
            max_r: 64,
            restarts: 10,
            schedule: Schedule::linear_beta(0.0, 3.0, 20).unwrap(),
            sweeps_per_step: 2,
            time_budget_s: None,
        };
        let est = rho_s_converged(&p, &protocol, 23).unwrap();
        assert!(est.converged, "trace: {:?}", est.trace);
        assert!(est.trace.len() >= 2);
        assert!(est.rho_s_mean >= 1.0);
        assert!(est.rho_s_mean <= est.r_final as f64);
        // doubling stops at the first agreeing pair on an easy instance
        assert!(est.r_final <= 64);

        let again = rho_s_converged(&p, &protocol, 23).unwrap();
        assert_eq!(est.rho_s_mean, again.rho_s_mean);
        assert_eq!(est.trace.len(), again.trace.len());
    }
}
