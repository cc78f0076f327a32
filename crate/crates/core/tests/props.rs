//! Property-based invariants over randomly generated networks and matrices.

mod common;

use phasenet::augment::{augment_network, delay_free_view};
use phasenet::ergodicity::{hurwitz_metzler, hurwitz_metzler_lp, spectral_abscissa};
use phasenet::netmodel::{parse_network, propensity, serialize_network};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn serialization_round_trips(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = common::random_unimolecular_network(&mut rng);
        let text = serialize_network(&net);
        let back = parse_network(&text).unwrap();
        prop_assert_eq!(net, back);
    }

    #[test]
    fn propensities_are_nonnegative_and_vanish_at_the_origin(
        seed in any::<u64>(),
        state in prop::collection::vec(0i64..30, 6),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = common::random_unimolecular_network(&mut rng);
        let x = &state[..net.n_species()];
        let lambda = propensity(&net, x).unwrap();
        for (r, reaction) in net.reactions.iter().enumerate() {
            prop_assert!(lambda[r] >= 0.0);
            if reaction.order() >= 1 && x.iter().all(|&v| v == 0) {
                prop_assert_eq!(lambda[r], 0.0);
            }
        }
    }

    #[test]
    fn lp_and_eigenvalue_stability_tests_agree(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = common::random_metzler(&mut rng, 6);
        prop_assume!(spectral_abscissa(&m).abs() > 1e-6);
        prop_assert_eq!(hurwitz_metzler(&m).unwrap(), hurwitz_metzler_lp(&m).unwrap());
    }

    #[test]
    fn drift_reduction_matches_the_block_solve(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = common::random_unimolecular_network(&mut rng);
        prop_assume!(net.has_delays());
        let aug = augment_network(&net).unwrap();
        let blocks = aug.blocks.as_ref().unwrap();
        let view = delay_free_view(&net).unwrap();
        let reduced = blocks.h_t.clone().lu().solve(&blocks.c).unwrap();
        let residual = (&view.a_df - (&blocks.a - &blocks.b * reduced)).abs().max();
        prop_assert!(residual <= 1e-9, "residual {}", residual);
    }

    #[test]
    fn stripped_stoichiometry_telescopes_through_delay_lines(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = common::random_unimolecular_network(&mut rng);
        let d = net.n_species();
        let view = delay_free_view(&net).unwrap();
        let stripped = net.strip_delays();
        for (r, reaction) in stripped.reactions.iter().enumerate() {
            let zeta = reaction.net_change(d);
            for j in 0..d {
                prop_assert_eq!(view.s_df[(j, r)], zeta[j] as f64);
            }
        }
    }
}
