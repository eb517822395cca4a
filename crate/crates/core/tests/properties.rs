//! Randomised invariants of configurations, fusion and the exact engines.

use cluster_forge_core::exact::{build_quality_table, evaluate_strategy};
use cluster_forge_core::value::{exact, format_fraction, half, parse_exact};
use cluster_forge_core::{Configuration, ExactValue, Greed, IdentityConfiguration, Modesty, Outcome, Scalar};
use num_bigint::BigInt;
use proptest::prelude::*;

fn configuration(max_chains: usize, max_len: u32) -> impl Strategy<Value = Configuration> {
    prop::collection::vec(1..=max_len, 0..=max_chains).prop_map(Configuration::from_lengths)
}

fn outcome() -> impl Strategy<Value = Outcome> {
    prop_oneof![Just(Outcome::Success), Just(Outcome::Failure)]
}

proptest! {
    #[test]
    fn fusion_decreases_vertex_count_and_keeps_length_parity(
        c in configuration(8, 9),
        pick in any::<prop::sample::Index>(),
        o in outcome(),
    ) {
        let pairs = c.fusion_pairs();
        prop_assume!(!pairs.is_empty());
        let (k, l) = pairs[pick.index(pairs.len())];
        let next = c.apply_fusion(k, l, o).unwrap();
        prop_assert!(next.vertex_count() < c.vertex_count());
        let expected = match o {
            Outcome::Success => c.total_length(),
            Outcome::Failure => c.total_length() - 2,
        };
        prop_assert_eq!(next.total_length(), expected);
    }

    #[test]
    fn canonical_key_round_trips(c in configuration(10, 12)) {
        let key = c.canonical_key();
        prop_assert_eq!(Configuration::parse_key(&key).unwrap(), c.clone());
        prop_assert_eq!(c.to_string().parse::<Configuration>().unwrap(), c);
    }

    #[test]
    fn identity_fusion_projects_to_anonymous_fusion(
        chains in prop::collection::vec(1u32..=9, 2..=8),
        i in any::<prop::sample::Index>(),
        j in any::<prop::sample::Index>(),
        o in outcome(),
    ) {
        let (i, j) = (i.index(chains.len()), j.index(chains.len()));
        prop_assume!(i != j);
        let id = IdentityConfiguration::new(chains.clone());
        let after = id.apply_fusion(i, j, o).unwrap();
        let anon = id.to_configuration().apply_fusion(chains[i], chains[j], o).unwrap();
        prop_assert_eq!(after.to_configuration(), anon);
    }

    #[test]
    fn fractions_round_trip(num in -10_000i64..10_000, den in 1i64..10_000) {
        let v = exact(num, den);
        prop_assert_eq!(parse_exact(&format_fraction(&v)).unwrap(), v);
    }

    #[test]
    fn strategies_never_beat_the_optimum(c in configuration(5, 4), pnum in 1i64..=10) {
        let p = exact(pnum, 10);
        let n = c.total_length() as u32;
        let table = build_quality_table(n, &p, None).unwrap();
        let best = table.quality(&c).unwrap().clone();
        prop_assert!(best <= ExactValue::from_u64(c.total_length()));
        for q in [
            evaluate_strategy(&Greed, &c, &p).unwrap().quality,
            evaluate_strategy(&Modesty, &c, &p).unwrap().quality,
        ] {
            prop_assert!(q <= best);
            prop_assert!(q >= ExactValue::from(BigInt::from(0)));
        }
    }

    #[test]
    fn attempts_identity_holds_on_random_configurations(c in configuration(6, 5)) {
        let e = evaluate_strategy(&Modesty, &c, &half()).unwrap();
        prop_assert_eq!(e.quality, ExactValue::from_u64(c.total_length()) - e.attempts);
    }
}
