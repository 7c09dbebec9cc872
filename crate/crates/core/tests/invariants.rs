//! Property-test suites for the cross-module invariants: exact domain
//! conversions, incremental evaluation, planted minima, reduction
//! correctness, solver bookkeeping, and metric identities.

mod props;

use proptest::prelude::*;

use hobo_core::poly::Domain;
use hobo_core::quadratize::PenaltyStrategy;

fn strategy_of(tight: bool) -> PenaltyStrategy {
    if tight {
        PenaltyStrategy::PerTermTight
    } else {
        PenaltyStrategy::Global
    }
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 1000,
        max_global_rejects: 20000,
        .. ProptestConfig::default()
    })]

    #[test]
    fn conversion_round_trips_exactly(
        p in props::arb_poly(Domain::Spin, 8, 10, 4),
        bits in props::arb_config_bits(),
    ) {
        props::check_conversion_round_trip(&p, bits)?;
    }

    #[test]
    fn spin_flip_deltas_match_evaluation(
        p in props::arb_poly(Domain::Spin, 8, 10, 4),
        bits in props::arb_config_bits(),
        v in any::<usize>(),
    ) {
        props::check_flip_delta(&p, bits, v)?;
    }

    #[test]
    fn bool_flip_deltas_match_evaluation(
        p in props::arb_poly(Domain::Bool, 8, 10, 4),
        bits in props::arb_config_bits(),
        v in any::<usize>(),
    ) {
        props::check_flip_delta(&p, bits, v)?;
    }

    #[test]
    fn densities_stay_in_unit_interval(p in props::arb_poly(Domain::Spin, 10, 12, 5)) {
        props::check_density_bounds(&p)?;
    }

    #[test]
    fn tile_planted_states_are_global_minima(seed in any::<u64>()) {
        props::check_tile_planted_minimum(seed)?;
    }

    #[test]
    fn composite_planted_states_are_global_minima(seed in any::<u64>()) {
        props::check_composite_minimum(seed)?;
    }

    #[test]
    fn gauge_twists_preserve_spectra(seed in any::<u64>()) {
        props::check_gauge_spectrum(seed)?;
    }

    #[test]
    fn reductions_preserve_minima_and_pin_aux(
        p in props::arb_reducible_poly(),
        tight in any::<bool>(),
    ) {
        props::check_reduction_minimum(&p, strategy_of(tight))?;
    }

    #[test]
    fn lifted_configurations_keep_their_energy(
        p in props::arb_reducible_poly(),
        bits in props::arb_config_bits(),
        tight in any::<bool>(),
    ) {
        props::check_lift_energy(&p, bits, strategy_of(tight))?;
    }

    #[test]
    fn tight_penalties_never_exceed_global(p in props::arb_reducible_poly()) {
        props::check_tight_below_global(&p)?;
    }

    #[test]
    fn schedules_increase_beta_strictly(
        linear in any::<bool>(),
        a in 0.01..5.0f64,
        b in 0.01..20.0f64,
        steps in 2usize..50,
    ) {
        props::check_schedule_monotone(linear, a, b, steps)?;
    }

    #[test]
    fn annealing_runs_are_self_consistent(
        p in props::arb_poly(Domain::Spin, 6, 8, 3),
        seed in any::<u64>(),
    ) {
        props::check_sa_contract(&p, seed)?;
    }

    #[test]
    fn population_annealing_conserves_replicas(seed in any::<u64>(), r_exp in any::<u32>()) {
        props::check_pamc_conservation(seed, r_exp)?;
    }

    #[test]
    fn family_entropy_stays_bounded(
        raw in prop::collection::vec(0.0..1.0f64, 1..20),
    ) {
        props::check_entropy_bounds(&raw)?;
    }

    #[test]
    fn r99_is_monotone_in_success(p1 in 0.001..=1.0f64, p2 in 0.001..=1.0f64) {
        props::check_r99_monotone(p1, p2)?;
    }

    #[test]
    fn residuals_are_nonnegative(e_gs in -1e6..-1e-3f64, excess in 0.0..1e6f64) {
        props::check_residual_nonneg(e_gs, excess)?;
    }

    #[test]
    fn fraction_solved_pools_across_records(
        pattern in prop::collection::vec(
            prop::collection::vec(prop::bool::weighted(0.7), 0..6),
            1..6,
        ),
    ) {
        props::check_fraction_pooling(&pattern)?;
    }

    #[test]
    fn tts_is_equivariant_under_time_scaling(
        pairs in prop::collection::vec((prop::bool::weighted(0.75), 0.1..100.0f64), 4..10),
        factor in 0.01..100.0f64,
    ) {
        props::check_tts_scale_equivariance(&pairs, factor)?;
    }
}
