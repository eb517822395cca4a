//! Weaving probabilities against direct sums, bounds and simulation.

use cluster_forge_core::twodim::{
    hoeffding_bound, overall_success_probability, percolation_scan, resource_count, simulate_weave,
    single_chain_weave_probability, single_chain_weave_probability_negative_binomial, Trend, WeaveParameters,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

fn binomial(n: u64, k: u64) -> BigInt {
    (0..k).fold(BigInt::one(), |acc, i| acc * BigInt::from(n - i) / BigInt::from(i + 1))
}

// P[Binomial(m, num/den) ≥ n] summed exactly.
fn exact_upper_tail(n: u64, m: u64, num: i64, den: i64) -> f64 {
    let p = BigRational::new(num.into(), den.into());
    let q = BigRational::one() - p.clone();
    let mut total = BigRational::zero();
    for j in n..=m {
        let term = BigRational::from_integer(binomial(m, j))
            * num_traits::pow(p.clone(), j as usize)
            * num_traits::pow(q.clone(), (m - j) as usize);
        total += term;
    }
    total.to_f64().unwrap()
}

#[test]
fn tail_matches_exact_summation() {
    for (num, den) in [(1, 2), (3, 10), (7, 10)] {
        for a in [1.5, 2.0, 3.0] {
            for n in 1..=30u32 {
                let w = WeaveParameters::new(n, a, num as f64 / den as f64).unwrap();
                let oracle = exact_upper_tail(u64::from(n), w.budget(), num, den);
                let got = single_chain_weave_probability(&w);
                assert!(
                    (got - oracle).abs() <= 1e-12 * oracle.max(1e-300) + 1e-300,
                    "n={n} a={a} p={num}/{den}"
                );
            }
        }
    }
}

#[test]
fn small_examples() {
    let w = WeaveParameters::new(1, 2.0, 0.5).unwrap();
    assert!((single_chain_weave_probability(&w) - 0.75).abs() < 1e-15);
    let w = WeaveParameters::new(3, 2.0, 0.5).unwrap();
    assert!((single_chain_weave_probability(&w) - 42.0 / 64.0).abs() < 1e-15);
}

#[test]
fn negative_binomial_form_agrees() {
    for p in [0.2, 0.5, 0.9] {
        for a in [1.2, 2.0, 4.0] {
            for n in 1..=50 {
                let w = WeaveParameters::new(n, a, p).unwrap();
                let x = single_chain_weave_probability(&w);
                let y = single_chain_weave_probability_negative_binomial(&w);
                assert!((x - y).abs() < 1e-12, "n={n} a={a} p={p}: {x} vs {y}");
            }
        }
    }
}

#[test]
fn certain_success_always_weaves() {
    let w = WeaveParameters::new(40, 1.5, 1.0).unwrap();
    assert_eq!(overall_success_probability(&w), 1.0);
    assert_eq!(simulate_weave(&w, 500, 3).unwrap().fraction, 1.0);
    assert!(hoeffding_bound(&w).unwrap() < 1.0);
}

#[test]
fn simulation_matches_small_weave() {
    let w = WeaveParameters::new(3, 2.0, 0.5).unwrap();
    let r = simulate_weave(&w, 100_000, 17).unwrap();
    let target = (42.0f64 / 64.0).powi(3);
    assert!((r.fraction - target).abs() < 3.0 * r.std_error, "{r:?}");
    assert_eq!(r, simulate_weave(&w, 100_000, 17).unwrap());
}

#[test]
fn hoeffding_is_a_lower_bound() {
    for n in 1..=200 {
        let w = WeaveParameters::new(n, 3.0, 0.5).unwrap();
        assert!(
            hoeffding_bound(&w).unwrap() <= single_chain_weave_probability(&w),
            "n={n}"
        );
    }
    let w = WeaveParameters::new(10, 3.0, 0.5).unwrap();
    assert!((hoeffding_bound(&w).unwrap() - (1.0 - (-72.0f64 / 30.0).exp())).abs() < 1e-15);
    assert!(hoeffding_bound(&WeaveParameters::new(10, 1.5, 0.5).unwrap()).is_err());
}

#[test]
fn success_trends_on_either_side_of_threshold() {
    let ns: Vec<u32> = (1..=10).map(|k| 50 * k).collect();
    let scan = percolation_scan(3.0, &[0.5], &ns).unwrap();
    assert_eq!(scan.rows[0].trend, Trend::Increasing);
    let scan = percolation_scan(1.5, &[0.5], &ns).unwrap();
    assert_eq!(scan.rows[0].trend, Trend::Decreasing);
}

#[test]
fn crossover_brackets_the_threshold() {
    let ps: Vec<f64> = (1..20).map(|k| f64::from(k) * 0.05).collect();
    let scan = percolation_scan(2.0, &ps, &[50, 100, 200, 400]).unwrap();
    assert_eq!(scan.bracket_contains_threshold, Some(true), "{:?}", scan.bracket);
    let critical: Vec<_> = scan.rows.iter().filter(|r| r.critical).collect();
    assert_eq!(critical.len(), 1);
    assert!((critical[0].p - 0.5).abs() < 1e-12);
}

#[test]
fn single_point_scan_has_no_trend() {
    let scan = percolation_scan(2.0, &[0.7], &[100]).unwrap();
    assert_eq!(scan.rows[0].trend, Trend::Undetermined);
}

#[test]
fn resources_grow_quadratically() {
    assert_eq!(resource_count(&WeaveParameters::new(1, 2.0, 0.5).unwrap()), 4);
    for a in [1.5, 2.0, 3.0] {
        let n = 2000;
        let per = resource_count(&WeaveParameters::new(n, a, 0.5).unwrap()) as f64 / f64::from(n * n);
        assert!((per - (2.0 * a - 1.0)).abs() < 1e-2, "a={a}: {per}");
    }
}
