//! Engine results against independent reference computations.

use cluster_forge_core::bounds::greed_closed_form;
use cluster_forge_core::config::enumerate_configurations;
use cluster_forge_core::exact::{
    build_quality_table, evaluate_stateful, evaluate_strategy, event_tree_oracle, optimal_quality,
};
use cluster_forge_core::value::{exact, exact_int, half};
use cluster_forge_core::{
    static_strategy, Anonymous, Configuration, ExactValue, Greed, IdentityConfiguration, Modesty, Scalar,
};
use num_bigint::BigInt;
use num_traits::One;

// Partition numbers from Euler's pentagonal recurrence.
fn partition_numbers(n: usize) -> Vec<u64> {
    let mut p = vec![0i64; n + 1];
    p[0] = 1;
    for m in 1..=n {
        let mut total = 0i64;
        for k in 1.. {
            let sign = if k % 2 == 1 { 1 } else { -1 };
            let g1 = k * (3 * k - 1) / 2;
            let g2 = k * (3 * k + 1) / 2;
            if g1 > m {
                break;
            }
            total += sign * p[m - g1];
            if g2 <= m {
                total += sign * p[m - g2];
            }
        }
        p[m] = total;
    }
    p.into_iter().map(|v| v as u64).collect()
}

#[test]
fn configuration_counts_match_partition_numbers() {
    let p = partition_numbers(30);
    let configs = enumerate_configurations(30);
    let mut by_length = vec![0u64; 31];
    for c in &configs {
        by_length[c.total_length() as usize] += 1;
    }
    assert_eq!(by_length, p);
}

// Memo-free expectimax over sorted length vectors, written without the
// library's fusion code.
fn brute_force_quality(lengths: &[u32]) -> ExactValue {
    if lengths.len() <= 1 {
        return exact_int(lengths.iter().map(|&l| i64::from(l)).sum());
    }
    let mut pairs = Vec::new();
    for i in 0..lengths.len() {
        for j in i + 1..lengths.len() {
            let key = (lengths[i].min(lengths[j]), lengths[i].max(lengths[j]));
            if !pairs.iter().any(|&(k, _, _)| k == key) {
                pairs.push((key, i, j));
            }
        }
    }
    let mut best: Option<ExactValue> = None;
    for (_, i, j) in pairs {
        let rest: Vec<u32> = lengths
            .iter()
            .enumerate()
            .filter(|&(x, _)| x != i && x != j)
            .map(|(_, &l)| l)
            .collect();
        let mut success = rest.clone();
        success.push(lengths[i] + lengths[j]);
        success.sort_unstable();
        let mut failure = rest;
        failure.extend([lengths[i] - 1, lengths[j] - 1].into_iter().filter(|&l| l > 0));
        failure.sort_unstable();
        let v = (brute_force_quality(&success) + brute_force_quality(&failure)) * half();
        if best.as_ref().is_none_or(|b| v > *b) {
            best = Some(v);
        }
    }
    best.unwrap()
}

#[test]
fn optimal_engine_matches_brute_force() {
    let table = build_quality_table(8, &half(), None).unwrap();
    for c in enumerate_configurations(8) {
        let lengths: Vec<u32> = c.lengths().collect();
        let oracle = brute_force_quality(&lengths);
        assert_eq!(table.quality(&c).unwrap(), &oracle, "{c}");
        assert_eq!(optimal_quality(&c, &half()), oracle, "{c}");
    }
}

#[test]
fn strategy_engine_matches_event_tree() {
    for p in [half(), exact(3, 10), exact(4, 5)] {
        for n in 1..=10 {
            let c = Configuration::epr_pairs(n);
            let id = IdentityConfiguration::epr_pairs(n);
            let g = evaluate_strategy(&Greed, &c, &p).unwrap();
            let tree = event_tree_oracle(&Anonymous(Greed), &id, &p).unwrap();
            assert_eq!(g.quality, tree.mean_length);
            assert_eq!(g.attempts, tree.mean_attempts);

            let m = evaluate_strategy(&Modesty, &c, &p).unwrap();
            let tree = event_tree_oracle(&Anonymous(Modesty), &id, &p).unwrap();
            assert_eq!(m.quality, tree.mean_length);
            assert_eq!(m.attempts, tree.mean_attempts);
            let total: ExactValue = tree.distribution.values().cloned().sum();
            assert!(total.is_one());

            let s = evaluate_stateful(&static_strategy(), &id, &p).unwrap();
            let tree = event_tree_oracle(&static_strategy(), &id, &p).unwrap();
            assert_eq!(s.quality, tree.mean_length);
            assert_eq!(s.attempts, tree.mean_attempts);
        }
    }
}

#[test]
fn greed_closed_form_matches_event_tree() {
    for n in 1..=14 {
        let tree = event_tree_oracle(&Anonymous(Greed), &IdentityConfiguration::epr_pairs(n), &half()).unwrap();
        assert_eq!(greed_closed_form(n), tree.mean_length, "N={n}");
    }
}

#[test]
fn two_chain_formula() {
    for l1 in 1..=8u32 {
        for l2 in 1..=8u32 {
            let q = optimal_quality(&Configuration::from_lengths([l1, l2]), &half());
            let expected =
                exact_int(i64::from(l1 + l2) - 2) + ExactValue::new(BigInt::from(2), BigInt::one() << l1.min(l2));
            assert_eq!(q, expected, "({l1},{l2})");
        }
    }
}

#[test]
fn attempts_identity_at_half() {
    for n in 1..=12 {
        let c = Configuration::epr_pairs(n);
        for e in [
            evaluate_strategy(&Greed, &c, &half()).unwrap(),
            evaluate_strategy(&Modesty, &c, &half()).unwrap(),
        ] {
            assert_eq!(e.quality, exact_int(i64::from(n)) - e.attempts);
        }
    }
}

#[test]
fn float_path_tracks_exact_path() {
    for n in 1..=12 {
        let c = Configuration::epr_pairs(n);
        let exact_q = evaluate_strategy(&Modesty, &c, &exact(3, 10)).unwrap().quality;
        let float_q = evaluate_strategy(&Modesty, &c, &0.3f64).unwrap().quality;
        assert!((exact_q.to_f64() - float_q).abs() < 1e-12);
    }
}
