//! Property checks shared by the invariants suite and the acceptance
//! criteria. Each check is a plain function over generated inputs so the
//! same body can run under `proptest!` and under a hand-driven
//! `TestRunner` with an explicit case budget.

use proptest::prelude::*;

use hobo_core::brute::{brute_force, exhaustive_minimum};
use hobo_core::incidence::{flip_delta, IncidenceIndex};
use hobo_core::metrics::{self, BenchmarkRecord, SOLVED_REL_TOL};
use hobo_core::planting::{self, ClassProbs};
use hobo_core::poly::{Configuration, Domain, Polynomial};
use hobo_core::quadratize::{
    self, penalty_global, reduce_to_quadratic, PenaltyStrategy,
};
use hobo_core::solvers::{self, Schedule, SolveRun};
use hobo_core::stats;

/// Small dyadic coefficient: k/4 with k in [-16, 16] minus zero.
pub fn arb_coeff() -> impl Strategy<Value = f64> {
    (-16i32..=16).prop_filter("nonzero", |&k| k != 0).prop_map(|k| k as f64 / 4.0)
}

/// Sorted distinct variable subset of size 1..=max_deg out of n.
fn arb_vars(n: usize, max_deg: usize) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::btree_set(0..n as u32, 1..=max_deg.min(n))
        .prop_map(|s| s.into_iter().collect())
}

/// Random multilinear polynomial in the given domain.
pub fn arb_poly(domain: Domain, max_n: usize, max_terms: usize, max_deg: usize) -> BoxedStrategy<Polynomial> {
    (2..=max_n)
        .prop_flat_map(move |n| {
            prop::collection::vec((arb_vars(n, max_deg), arb_coeff()), 1..=max_terms)
                .prop_map(move |terms| {
                    let mut p = Polynomial::new(domain, n);
                    for (vars, c) in terms {
                        p.add_term(&vars, c).unwrap();
                    }
                    p
                })
        })
        .boxed()
}

/// Boolean polynomial with guaranteed higher-order content and a bounded
/// reduced size, so brute-force checks stay cheap.
pub fn arb_reducible_poly() -> BoxedStrategy<Polynomial> {
    arb_poly(Domain::Bool, 6, 6, 4)
        .prop_filter("has higher-order terms", |p| p.degree() > 2)
        .boxed()
}

pub fn arb_config_bits() -> impl Strategy<Value = u64> {
    any::<u64>()
}

// ---------------------------------------------------------------------------
// Polynomial layer

/// Spin -> boolean -> spin round trip: identical coefficients (dyadic
/// input), identical energy on every configuration.
pub fn check_conversion_round_trip(p: &Polynomial, bits: u64) -> Result<(), TestCaseError> {
    let b = p.to_boolean().unwrap();
    let back = b.to_spin().unwrap();
    prop_assert_eq!(p.num_terms(), back.num_terms());
    prop_assert_eq!(p.constant(), back.constant());
    for (vars, c) in p.terms() {
        prop_assert_eq!(back.coefficient(vars), c);
    }
    let n = p.num_vars();
    let s = Configuration::from_bits(Domain::Spin, bits, n);
    let e_spin = p.evaluate(&s).unwrap();
    let e_bool = b.evaluate(&s.to_bool()).unwrap();
    let e_back = back.evaluate(&s).unwrap();
    prop_assert!((e_spin - e_bool).abs() <= 1e-9 * (1.0 + e_spin.abs()));
    prop_assert_eq!(e_spin, e_back);
    Ok(())
}

/// Incremental flip delta equals the full evaluation difference.
pub fn check_flip_delta(p: &Polynomial, bits: u64, v_raw: usize) -> Result<(), TestCaseError> {
    let n = p.num_vars();
    let v = v_raw % n;
    let index = IncidenceIndex::build(p);
    let config = Configuration::from_bits(p.domain(), bits, n);
    let before = p.evaluate(&config).unwrap();
    let delta = flip_delta(&index, &config, v).unwrap();
    let mut values = config.values().to_vec();
    values[v] = match p.domain() {
        Domain::Spin => -values[v],
        Domain::Bool => 1 - values[v],
    };
    let flipped = Configuration::new(p.domain(), values).unwrap();
    let after = p.evaluate(&flipped).unwrap();
    prop_assert!((after - before - delta).abs() <= 1e-9 * (1.0 + after.abs()));
    Ok(())
}

/// Interaction density lies in [0, 1] whenever it is defined.
pub fn check_density_bounds(p: &Polynomial) -> Result<(), TestCaseError> {
    if let Ok(d) = stats::density(p) {
        prop_assert!((0.0..=1.0).contains(&d), "density {}", d);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Planting layer

/// A tile-planted instance evaluates its planted state to the certified
/// energy, and brute force confirms it is the global minimum.
pub fn check_tile_planted_minimum(seed: u64) -> Result<(), TestCaseError> {
    let inst = planting::plant_tile(2, 4, ClassProbs::default(), seed).unwrap();
    let e = inst.poly.evaluate(&inst.planted).unwrap();
    prop_assert!((e - inst.planted_energy).abs() <= 1e-9);
    let (min, _) = exhaustive_minimum(&inst.poly, 16).unwrap();
    prop_assert!((min - inst.planted_energy).abs() <= 1e-9);
    Ok(())
}

/// Composite instances keep the product-form planted energy and minimum.
pub fn check_composite_minimum(seed: u64) -> Result<(), TestCaseError> {
    let tile = planting::plant_square_tile(2, ClassProbs::default(), rng_path(seed, 0)).unwrap();
    let field = planting::plant_field(3, rng_path(seed, 1)).unwrap();
    let inst = planting::compose(&[&tile, &field]).unwrap();
    let e = inst.poly.evaluate(&inst.planted).unwrap();
    prop_assert!((e - inst.planted_energy).abs() <= 1e-9 * inst.planted_energy.abs().max(1.0));
    let (min, _) = exhaustive_minimum(&inst.poly, 16).unwrap();
    prop_assert!((min - inst.planted_energy).abs() <= 1e-9 * min.abs().max(1.0));
    Ok(())
}

fn rng_path(seed: u64, tag: u64) -> u64 {
    hobo_core::rng::derive(seed, &[tag])
}

/// Gauge randomization permutes the spectrum without changing it.
pub fn check_gauge_spectrum(seed: u64) -> Result<(), TestCaseError> {
    let inst = planting::plant_square_tile(2, ClassProbs::default(), seed).unwrap();
    let twisted = planting::gauge_randomize(&inst, seed ^ 0xabcd).unwrap();
    prop_assert_eq!(twisted.planted_energy, inst.planted_energy);
    let spectrum = |p: &Polynomial| -> Vec<f64> {
        let n = p.num_vars();
        let mut es: Vec<f64> = (0..1u64 << n)
            .map(|b| p.evaluate(&Configuration::from_bits(Domain::Spin, b, n)).unwrap())
            .collect();
        es.sort_by(|a, b| a.partial_cmp(b).unwrap());
        es
    };
    prop_assert_eq!(spectrum(&inst.poly), spectrum(&twisted.poly));
    Ok(())
}

// ---------------------------------------------------------------------------
// Reduction layer

/// Reduction to degree <= 2 preserves the global minimum; auxiliaries are
/// pinned to the products they stand for at every reduced minimizer.
pub fn check_reduction_minimum(p: &Polynomial, strategy: PenaltyStrategy) -> Result<(), TestCaseError> {
    let red = reduce_to_quadratic(p, strategy).unwrap();
    prop_assume!(red.n_total <= 12);
    prop_assert!(red.qubo.degree() <= 2);
    let (orig_min, _) = exhaustive_minimum(p, 12).unwrap();
    let ground = brute_force(&red.qubo, 12).unwrap();
    prop_assert!(
        (orig_min - ground.energy).abs() <= 1e-9 * (1.0 + orig_min.abs()),
        "minimum changed: {} -> {}",
        orig_min,
        ground.energy
    );
    // every reduced minimizer carries consistent aux: it projects onto an
    // original minimizer and lifting the projection reproduces it
    for arg in &ground.configs {
        let proj = quadratize::project_solution(&red, arg).unwrap();
        let e_proj = p.evaluate(&proj).unwrap();
        prop_assert!((e_proj - orig_min).abs() <= 1e-9 * (1.0 + orig_min.abs()));
        let lifted = quadratize::lift_solution(&red, &proj).unwrap();
        prop_assert_eq!(lifted.values(), arg.values());
    }
    Ok(())
}

/// Lifting any configuration reproduces the original energy exactly, and
/// projection inverts the lift.
pub fn check_lift_energy(p: &Polynomial, bits: u64, strategy: PenaltyStrategy) -> Result<(), TestCaseError> {
    let red = reduce_to_quadratic(p, strategy).unwrap();
    let x = Configuration::from_bits(Domain::Bool, bits, p.num_vars());
    let lifted = quadratize::lift_solution(&red, &x).unwrap();
    let e_orig = p.evaluate(&x).unwrap();
    let e_red = red.qubo.evaluate(&lifted).unwrap();
    prop_assert!((e_orig - e_red).abs() <= 1e-9 * (1.0 + e_orig.abs()));
    let back = quadratize::project_solution(&red, &lifted).unwrap();
    prop_assert_eq!(back.values(), x.values());
    Ok(())
}

/// Every tight penalty is bounded by the global one for the same input.
pub fn check_tight_below_global(p: &Polynomial) -> Result<(), TestCaseError> {
    let global = penalty_global(p);
    let red = reduce_to_quadratic(p, PenaltyStrategy::PerTermTight).unwrap();
    for sub in &red.substitutions {
        prop_assert!(
            sub.penalty <= global + 1e-9,
            "tight {} above global {}",
            sub.penalty,
            global
        );
        prop_assert!(sub.penalty > 0.0);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Solver layer

/// Annealing schedules are strictly increasing in beta.
pub fn check_schedule_monotone(
    linear: bool,
    a: f64,
    b: f64,
    steps: usize,
) -> Result<(), TestCaseError> {
    let schedule = if linear {
        Schedule::linear_beta(a, a + b, steps)
    } else {
        Schedule::geometric_temperature(a + b, a, steps)
    };
    let Ok(s) = schedule else { return Ok(()) };
    for i in 1..s.steps() {
        prop_assert!(s.beta(i) > s.beta(i - 1));
    }
    Ok(())
}

/// Simulated annealing returns a self-consistent run: reported best equals
/// the evaluated best configuration and never undercuts the true minimum.
pub fn check_sa_contract(p: &Polynomial, seed: u64) -> Result<(), TestCaseError> {
    let schedule = Schedule::linear_beta(0.0, 5.0, 12).unwrap();
    let run = solvers::simulated_annealing(p, &schedule, 2, seed, None, None).unwrap();
    let e = p.evaluate(&run.best_config).unwrap();
    prop_assert!((run.best_energy - e).abs() <= 1e-9 * (1.0 + e.abs()));
    let (min, _) = exhaustive_minimum(p, 12).unwrap();
    prop_assert!(run.best_energy >= min - 1e-9 * (1.0 + min.abs()));
    prop_assert!(run.tau >= 0.0);
    prop_assert!(run.sweeps > 0);
    Ok(())
}

/// Population annealing conserves the population exactly: fractions are
/// integer multiples of 1/R, sum to 1, and the entropy stays in
/// [0, ln R]; the replica-diversity estimate stays in [1, R].
pub fn check_pamc_conservation(seed: u64, r_exp: u32) -> Result<(), TestCaseError> {
    let r = 1usize << (2 + r_exp % 4); // 4..=32
    let mut p = Polynomial::new(Domain::Spin, 4);
    for v in 0..4u32 {
        p.add_term(&[v, (v + 1) % 4], -1.0).unwrap();
    }
    let schedule = Schedule::linear_beta(0.0, 2.0, 8).unwrap();
    let run = solvers::population_annealing(&p, r, &schedule, 1, seed).unwrap();
    for step in &run.steps {
        let total: f64 = step.fractions.iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-9);
        for &f in &step.fractions {
            let count = f * r as f64;
            prop_assert!((count - count.round()).abs() <= 1e-9, "fraction {} not k/R", f);
            prop_assert!(f > 0.0);
        }
        prop_assert!(step.family_entropy >= 0.0);
        prop_assert!(step.family_entropy <= (r as f64).ln() + 1e-12);
    }
    prop_assert!(run.rho_s_final >= 1.0 - 1e-12);
    prop_assert!(run.rho_s_final <= r as f64 + 1e-9);
    Ok(())
}

/// Family entropy of a normalized fraction vector stays in [0, ln m].
pub fn check_entropy_bounds(raw: &[f64]) -> Result<(), TestCaseError> {
    let total: f64 = raw.iter().sum();
    prop_assume!(total > 0.0);
    let fractions: Vec<f64> = raw.iter().map(|&w| w / total).collect();
    let s = solvers::family_entropy(&fractions);
    prop_assume!(s.is_ok()); // renormalization can miss 1.0 by > 1e-9
    let s = s.unwrap();
    prop_assert!(s >= 0.0);
    prop_assert!(s <= (fractions.len() as f64).ln() + 1e-9);
    Ok(())
}

// ---------------------------------------------------------------------------
// Metrics layer

/// r99 is monotone non-increasing in the success probability.
pub fn check_r99_monotone(p1: f64, p2: f64) -> Result<(), TestCaseError> {
    prop_assume!(p1 > 0.0 && p2 > 0.0 && p1 <= 1.0 && p2 <= 1.0);
    let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
    prop_assert!(metrics::r99(lo).unwrap() >= metrics::r99(hi).unwrap() - 1e-12);
    prop_assert!(metrics::r99(hi).unwrap() >= 1.0);
    Ok(())
}

/// Residuals against a negative optimum are non-negative and vanish only
/// at the optimum.
pub fn check_residual_nonneg(e_gs: f64, excess: f64) -> Result<(), TestCaseError> {
    prop_assume!(e_gs < -1e-6 && excess >= 0.0 && excess.is_finite());
    let r = metrics::residual(e_gs, e_gs + excess).unwrap();
    prop_assert!(r >= 0.0);
    if excess == 0.0 {
        prop_assert!(r == 0.0);
    }
    Ok(())
}

fn synthetic_run(solved: bool, tau: f64) -> SolveRun {
    SolveRun {
        best_energy: if solved { -8.0 } else { -6.0 },
        best_config: Configuration::new(Domain::Spin, vec![1]).unwrap(),
        tau,
        timeout_s: None,
        timed_out: false,
        seed: 0,
        sweeps: 0,
        params: String::new(),
        hit_planted: None,
    }
}

/// Pooled solved fraction equals the run-count-weighted mean of per-record
/// fractions and stays in [0, 1].
pub fn check_fraction_pooling(pattern: &[Vec<bool>]) -> Result<(), TestCaseError> {
    let records: Vec<BenchmarkRecord> = pattern
        .iter()
        .filter(|flags| !flags.is_empty())
        .map(|flags| {
            let runs = flags.iter().map(|&s| synthetic_run(s, 1.0)).collect();
            BenchmarkRecord::new("p", 3, 1, -8.0, runs).unwrap()
        })
        .collect();
    prop_assume!(!records.is_empty());
    let pooled = metrics::fraction_solved(&records, SOLVED_REL_TOL).unwrap();
    prop_assert!((0.0..=1.0).contains(&pooled));
    let total_runs: usize = records.iter().map(|r| r.runs.len()).sum();
    let weighted: f64 = records
        .iter()
        .map(|r| {
            metrics::success_probability(r, SOLVED_REL_TOL).unwrap() * r.runs.len() as f64
        })
        .sum::<f64>()
        / total_runs as f64;
    prop_assert!((pooled - weighted).abs() <= 1e-12);
    Ok(())
}

/// Scaling all run times by a positive factor scales the TTS point
/// estimate and interval by the same factor.
pub fn check_tts_scale_equivariance(
    pairs: &[(bool, f64)],
    factor: f64,
) -> Result<(), TestCaseError> {
    prop_assume!(pairs.len() >= 4);
    let solved = pairs.iter().filter(|&&(s, _)| s).count();
    prop_assume!(solved * 2 >= pairs.len());
    prop_assume!(factor > 1e-3 && factor < 1e3);
    let make = |scale: f64| {
        let runs = pairs.iter().map(|&(s, t)| synthetic_run(s, t * scale)).collect();
        BenchmarkRecord::new("s", 3, 1, -8.0, runs).unwrap()
    };
    let base = metrics::tts(&make(1.0), SOLVED_REL_TOL, 5).unwrap();
    let scaled = metrics::tts(&make(factor), SOLVED_REL_TOL, 5).unwrap();
    // an all-failure resample puts +inf in the upper tail on both sides
    let close =
        |a: f64, b: f64| a == b || (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()));
    prop_assert!(close(scaled.tts, factor * base.tts));
    prop_assert!(close(scaled.ci_lo, factor * base.ci_lo));
    prop_assert!(close(scaled.ci_hi, factor * base.ci_hi));
    Ok(())
}
