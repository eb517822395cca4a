//! The razor model: after every fusion, chains longer than `R` are cut back
//! to length `R`. Its optimal expected attempts lower-bound those of the full
//! model, which turns into an upper bound on the quality.

use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;

use crate::config::{Configuration, Outcome};
use crate::error::{Error, Result};
use crate::exact::Evaluation;
use crate::value::{half, ExactValue, Scalar};

/// Result of a fusion in the razor model.
pub fn shaved_fusion(c: &Configuration, k: u32, l: u32, outcome: Outcome, r: u32) -> Result<Configuration> {
    let mut next = c.apply_fusion(k, l, outcome)?;
    if outcome == Outcome::Success && k + l > r {
        next = next.without_chain(k + l).expect("merged chain present").with_chain(r);
    }
    Ok(next)
}

fn reachable(c0: &Configuration, r: u32) -> HashSet<Configuration> {
    let mut seen = HashSet::new();
    let mut stack = vec![c0.clone()];
    seen.insert(c0.clone());
    while let Some(c) = stack.pop() {
        if c.is_terminal() {
            continue;
        }
        for (k, l) in c.fusion_pairs() {
            for o in Outcome::BOTH {
                let next = shaved_fusion(&c, k, l, o, r).expect("feasible pair");
                if seen.insert(next.clone()) {
                    stack.push(next);
                }
            }
        }
    }
    seen
}

/// Best quality and fewest expected attempts in the razor model from `c0`.
///
/// Both optima are taken independently over all strategies. States are
/// solved in increasing vertex count, in parallel within each level.
pub fn razor_evaluation<T: Scalar>(c0: &Configuration, r: u32, p: &T) -> Result<Evaluation<T>> {
    if r < 2 {
        return Err(Error::Domain(format!("razor length must be at least 2, got {r}")));
    }
    if c0.max_length().unwrap_or(0) > r {
        return Err(Error::Domain(format!(
            "initial configuration has chains longer than R={r}"
        )));
    }
    let q = T::one() - p.clone();
    let mut levels: BTreeMap<u64, Vec<Configuration>> = BTreeMap::new();
    for c in reachable(c0, r) {
        levels.entry(c.vertex_count()).or_default().push(c);
    }
    let mut solved: HashMap<Configuration, Evaluation<T>> = HashMap::new();
    for (_, states) in levels {
        let computed: Vec<_> = states
            .into_par_iter()
            .map(|c| {
                if c.is_terminal() {
                    let v = Evaluation {
                        quality: T::from_u64(c.total_length()),
                        attempts: T::zero(),
                    };
                    return (c, v);
                }
                let mut best_q: Option<T> = None;
                let mut best_t: Option<T> = None;
                for (k, l) in c.fusion_pairs() {
                    let s = &solved[&shaved_fusion(&c, k, l, Outcome::Success, r).expect("feasible pair")];
                    let f = &solved[&shaved_fusion(&c, k, l, Outcome::Failure, r).expect("feasible pair")];
                    let qv = p.clone() * s.quality.clone() + q.clone() * f.quality.clone();
                    let tv = T::one() + p.clone() * s.attempts.clone() + q.clone() * f.attempts.clone();
                    if best_q.as_ref().is_none_or(|b| qv > *b) {
                        best_q = Some(qv);
                    }
                    if best_t.as_ref().is_none_or(|b| tv < *b) {
                        best_t = Some(tv);
                    }
                }
                let v = Evaluation {
                    quality: best_q.expect("non-terminal"),
                    attempts: best_t.expect("non-terminal"),
                };
                (c, v)
            })
            .collect();
        solved.extend(computed);
    }
    Ok(solved.remove(c0).expect("initial state solved"))
}

/// Razor-model quality and attempts for `N` EPR pairs.
pub fn razor_quality<T: Scalar>(n: u32, r: u32, p: &T) -> Result<Evaluation<T>> {
    razor_evaluation(&Configuration::epr_pairs(n), r, p)
}

/// Upper bound `N − ⟨T⟩_razor` on the quality `Q(N)` at success probability 1/2.
pub fn razor_upper_bound(n: u32, r: u32) -> Result<ExactValue> {
    let e = razor_quality(n, r, &half())?;
    Ok(ExactValue::from_u64(u64::from(n)) - e.attempts)
}

/// `L − 2(1 − p)⟨T⟩_razor` for arbitrary `p`. Only informational: the razor
/// bound is established at `p = 1/2`.
pub fn razor_upper_bound_informational<T: Scalar>(n: u32, r: u32, p: &T) -> Result<T> {
    let e = razor_quality(n, r, p)?;
    let two = T::from_u64(2);
    Ok(T::from_u64(u64::from(n)) - two * (T::one() - p.clone()) * e.attempts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::optimal_evaluation;

    #[test]
    fn shaving_caps_length() {
        let c = Configuration::from_lengths([2, 2]);
        assert_eq!(
            shaved_fusion(&c, 2, 2, Outcome::Success, 3).unwrap(),
            Configuration::single(3)
        );
        assert_eq!(
            shaved_fusion(&c, 2, 2, Outcome::Failure, 3).unwrap(),
            Configuration::epr_pairs(2)
        );
    }

    #[test]
    fn large_razor_recovers_full_model() {
        for n in 1..=9 {
            let full = optimal_evaluation(&Configuration::epr_pairs(n), &half());
            let razor = razor_quality(n, n.max(2), &half()).unwrap();
            assert_eq!(razor.quality, full.quality, "N={n}");
        }
    }

    #[test]
    fn razor_uses_fewer_attempts() {
        let full = optimal_evaluation(&Configuration::epr_pairs(4), &half());
        let razor = razor_quality(4, 2, &half()).unwrap();
        assert!(razor.attempts <= full.attempts);
    }

    #[test]
    fn rejects_short_razor() {
        assert!(razor_quality(4, 1, &half()).is_err());
    }
}
