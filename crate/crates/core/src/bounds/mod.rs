//! Lower and upper bounds on the achievable expected chain length.

mod lp;
mod razor;

pub use lp::{lp_attempts_bound, maximize, LinearProgramInstance, LpSolution, SimplexSolution};
pub use razor::{razor_evaluation, razor_quality, razor_upper_bound, razor_upper_bound_informational, shaved_fusion};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use statrs::function::factorial::ln_binomial;

use crate::config::Configuration;
use crate::error::{Error, Result};
use crate::exact::StrategyEvaluator;
use crate::strategy::Modesty;
use crate::value::{exact, exact_int, ExactValue, Scalar};

/// `N/5 + 2`, valid for `N ≥ 6`.
pub fn analytic_upper_bound(n: u32) -> Result<ExactValue> {
    if n < 6 {
        return Err(Error::Domain(format!(
            "N/5 + 2 holds for N ≥ 6; for N = {n} use lp_attempts_bound, which gives (N−1)/2 attempts"
        )));
    }
    Ok(exact(i64::from(n), 5) + exact_int(2))
}

/// Lower bound for a configuration assembled from `k` independent parts,
/// each with a known lower bound: `Σ q_i − 2(k − 1)`.
pub fn combine_lower_bound(parts: &[ExactValue]) -> Result<ExactValue> {
    if parts.is_empty() {
        return Err(Error::Domain("at least one part is required".into()));
    }
    let sum: ExactValue = parts.iter().cloned().sum();
    Ok(sum - exact_int(2 * (parts.len() as i64 - 1)))
}

/// `Q̃_M(n)` for `n = 0..=n_max`, indexed by `n`.
pub fn modesty_qualities<T: Scalar>(n_max: u32, p: &T) -> Result<Vec<T>> {
    let mut ev = StrategyEvaluator::new(&Modesty, p.clone());
    (0..=n_max)
        .map(|n| ev.evaluate(&Configuration::epr_pairs(n)).map(|e| e.quality))
        .collect()
}

/// Slope `α = (Q̃_M(N0) − 2)/N0` of the Modesty-based lower bound.
pub fn modesty_alpha(n0: u32, table: &[ExactValue]) -> Result<ExactValue> {
    if n0 == 0 {
        return Err(Error::Domain("N0 must be positive".into()));
    }
    let q = table
        .get(n0 as usize)
        .ok_or_else(|| Error::Domain(format!("Modesty table has no entry for n = {n0}")))?;
    Ok((q.clone() - exact_int(2)) / exact_int(i64::from(n0)))
}

/// Lower bound `Q̃_M(N0) + α(N − N0)` on `Q(N)` for `N ≥ N0`.
///
/// `table[n]` must hold `Q̃_M(n)` for every `n ≤ 2·N0`. The bound needs
/// `(Q̃_M(n) − 2)/n ≥ α` for all `N0 ≤ n ≤ 2·N0`; every `n` where this fails
/// is reported.
pub fn modesty_lower_bound(n: u32, n0: u32, table: &[ExactValue]) -> Result<ExactValue> {
    if n < n0 {
        return Err(Error::Domain(format!("bound requires N ≥ N0, got N = {n}, N0 = {n0}")));
    }
    if table.len() <= 2 * n0 as usize {
        return Err(Error::Domain(format!(
            "Modesty table must cover n ≤ {}, has {} entries",
            2 * n0,
            table.len()
        )));
    }
    let alpha = modesty_alpha(n0, table)?;
    let failing: Vec<u32> = (n0..=2 * n0)
        .filter(|&m| (table[m as usize].clone() - exact_int(2)) / exact_int(i64::from(m)) < alpha)
        .collect();
    if !failing.is_empty() {
        return Err(Error::Hypothesis { failing });
    }
    Ok(table[n0 as usize].clone() + alpha * exact_int(i64::from(n - n0)))
}

/// `(137/2048)·N + 2`, the yield of Static for `N = 2^(3+m)` EPR pairs.
pub fn static_lower_bound(n: u32) -> Result<ExactValue> {
    if n < 8 || !n.is_power_of_two() {
        return Err(Error::Domain(format!("N must be 2^(3+m), got {n}")));
    }
    Ok(exact(137 * i64::from(n), 2048) + exact_int(2))
}

fn binomial(n: u32, k: u32) -> BigInt {
    (0..k).fold(BigInt::one(), |acc, i| acc * BigInt::from(n - i) / BigInt::from(i + 1))
}

/// Exact expected length reached by Greed from `N` EPR pairs at success
/// probability 1/2: `2·Σ_{k ≤ (N−1)/2} 2^−N C(N,k)(N − 2k)`.
pub fn greed_closed_form(n: u32) -> ExactValue {
    if n == 0 {
        return ExactValue::zero();
    }
    let sum = (0..=(n - 1) / 2).fold(BigInt::zero(), |acc, k| acc + binomial(n, k) * BigInt::from(n - 2 * k));
    ExactValue::new(sum * 2, BigInt::one() << n)
}

/// [`greed_closed_form`] in floating point, with each term evaluated in log
/// space so that large `N` does not overflow.
pub fn greed_closed_form_f64(n: u32) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let ln2n = f64::from(n) * std::f64::consts::LN_2;
    2.0 * (0..=(n - 1) / 2)
        .map(|k| (ln_binomial(u64::from(n), u64::from(k)) - ln2n).exp() * f64::from(n - 2 * k))
        .sum::<f64>()
}

/// Leading-order behaviour `√(2N/π)` of Greed.
pub fn greed_asymptotic(n: u32) -> f64 {
    (2.0 * f64::from(n) / std::f64::consts::PI).sqrt()
}

/// `2(1 − p)/p`: the chain length beyond which insistent pairwise fusion grows
/// linearly at success probability `p`.
pub fn general_ps_initial_length<T: Scalar>(p: &T) -> Result<T> {
    if !(*p > T::zero() && *p <= T::one()) {
        return Err(Error::InvalidProbability(p.to_string()));
    }
    Ok(T::from_u64(2) * (T::one() - p.clone()) / p.clone())
}

/// `((1/α + ε)L, (1/α − ε)L)`: a number of EPR pairs that suffices for a chain
/// of length `L` with probability tending to one, and one that asymptotically
/// does not.
pub fn inverse_resource_bounds(l: f64, alpha: f64, epsilon: f64) -> Result<(f64, f64)> {
    if epsilon <= 0.0 || epsilon.is_nan() {
        return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
    }
    if alpha <= 0.0 || alpha.is_nan() {
        return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
    }
    Ok(((1.0 / alpha + epsilon) * l, (1.0 / alpha - epsilon) * l))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::half;

    #[test]
    fn simple_formulas() {
        assert_eq!(analytic_upper_bound(10).unwrap(), exact_int(4));
        assert!(analytic_upper_bound(5).is_err());
        assert_eq!(combine_lower_bound(&[exact(7, 3)]).unwrap(), exact(7, 3));
        assert!(combine_lower_bound(&[]).is_err());
        assert_eq!(
            combine_lower_bound(&vec![exact(649, 256); 8]).unwrap(),
            exact(8 * 649, 256) - exact_int(14)
        );
        assert_eq!(static_lower_bound(16).unwrap(), exact(137, 128) + exact_int(2));
        assert_eq!(static_lower_bound(64).unwrap(), exact(137, 32) + exact_int(2));
        assert!(static_lower_bound(24).is_err());
        assert!(static_lower_bound(4).is_err());
    }

    #[test]
    fn initial_length() {
        assert_eq!(general_ps_initial_length(&half()).unwrap(), exact_int(2));
        assert_eq!(general_ps_initial_length(&exact_int(1)).unwrap(), exact_int(0));
        assert_eq!(general_ps_initial_length(&exact(1, 3)).unwrap(), exact_int(4));
        assert!(general_ps_initial_length(&0.0).is_err());
    }

    #[test]
    fn inverse_bounds() {
        let (suff, insuff) = inverse_resource_bounds(100.0, 0.2, 0.5).unwrap();
        assert_eq!(suff, 550.0);
        assert_eq!(insuff, 450.0);
        assert!(inverse_resource_bounds(100.0, 0.2, 0.0).is_err());
        let (suff, _) = inverse_resource_bounds(1.0, 0.153336, 0.01).unwrap();
        assert!((suff - 6.53).abs() < 0.01);
    }

    #[test]
    fn greed_formulas() {
        assert_eq!(greed_closed_form(4), exact(3, 2));
        assert_eq!(greed_closed_form(1), exact_int(1));
        for n in 1..40 {
            let e = greed_closed_form(n).to_f64();
            assert!((e - greed_closed_form_f64(n)).abs() < 1e-9 * e.max(1.0));
        }
    }

    #[test]
    fn modesty_alpha_at_eight() {
        let table = modesty_qualities(16, &half()).unwrap();
        assert_eq!(table[8], exact(649, 256));
        assert_eq!(modesty_alpha(8, &table).unwrap(), exact(137, 2048));
        assert_eq!(modesty_lower_bound(8, 8, &table).unwrap(), exact(649, 256));
        assert!(modesty_lower_bound(20, 9, &table).is_err());
    }
}
