//! Exhaustive checks of the structural properties of the optimal quality.
//!
//! Adding an edge means lengthening one existing chain by one; removing an
//! edge shortens one chain, which disappears when it had length one.

use serde::Serialize;

use crate::config::{enumerate_configurations, Action, Configuration, Outcome};
use crate::error::Result;
use crate::exact::{build_quality_table, QualityTable};
use crate::value::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaCheck {
    pub name: &'static str,
    pub statement: &'static str,
    pub checked: u64,
    pub violations: Vec<String>,
}

impl LemmaCheck {
    fn new(name: &'static str, statement: &'static str) -> Self {
        Self {
            name,
            statement,
            checked: 0,
            violations: Vec::new(),
        }
    }

    fn record(&mut self, holds: bool, describe: impl FnOnce() -> String) {
        self.checked += 1;
        if !holds {
            self.violations.push(describe());
        }
    }

    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaReport {
    pub max_length: u32,
    pub ps: String,
    pub checks: Vec<LemmaCheck>,
}

impl LemmaReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(LemmaCheck::holds)
    }
}

fn lengthened(c: &Configuration, k: u32) -> Configuration {
    c.without_chain(k).expect("chain present").with_chain(k + 1)
}

fn shortened(c: &Configuration, k: u32) -> Configuration {
    let rest = c.without_chain(k).expect("chain present");
    if k > 1 {
        rest.with_chain(k - 1)
    } else {
        rest
    }
}

/// Checks every configuration of total length at most `max_length`:
///
/// * more: `Q(C + e_i) ≥ Q(C)`
/// * win: `Q(C_S) ≥ Q(C) ≥ Q(C_F)` under the optimal action
/// * cat: `Q(C + e_i) ≤ Q(C) + 1`
/// * less-less: `⟨T⟩(C − e_i) ≤ ⟨T⟩(C)` for the optimal strategy
/// * attempts: `Q(C) = L(C) − 2(1 − p)⟨T⟩(C)`
pub fn check_lemmas<T: Scalar>(max_length: u32, p: &T) -> Result<LemmaReport> {
    let table: QualityTable<T> = build_quality_table(max_length + 1, p, None)?;
    let one = T::one();
    let loss = T::from_u64(2) * (one.clone() - p.clone());
    let mut more = LemmaCheck::new("more", "Q(C+e_i) >= Q(C)");
    let mut win = LemmaCheck::new("win", "Q(C_S) >= Q(C) >= Q(C_F)");
    let mut cat = LemmaCheck::new("cat", "Q(C+e_i) <= Q(C)+1");
    let mut less = LemmaCheck::new("less-less", "T(C-e_i) <= T(C)");
    let mut attempts = LemmaCheck::new("attempts", "Q(C) = L(C) - 2(1-p)T(C)");

    for c in enumerate_configurations(max_length) {
        let e = table.get(&c).expect("table covers C");
        let expected = T::from_u64(c.total_length()) - loss.clone() * e.attempts.clone();
        attempts.record(expected == e.quality, || {
            format!("{c}: Q={} T={}", e.quality, e.attempts)
        });

        let lengths: Vec<u32> = c.counts().iter().map(|&(len, _)| len).collect();
        for &k in &lengths {
            let up = table.get(&lengthened(&c, k)).expect("table covers C+e_i");
            more.record(up.quality >= e.quality, || {
                format!("{c} lengthening {k}: {} < {}", up.quality, e.quality)
            });
            cat.record(up.quality <= e.quality.clone() + one.clone(), || {
                format!("{c} lengthening {k}: {} > {} + 1", up.quality, e.quality)
            });
            let down = table.get(&shortened(&c, k)).expect("table covers C-e_i");
            less.record(down.attempts <= e.attempts, || {
                format!("{c} shortening {k}: {} > {}", down.attempts, e.attempts)
            });
        }

        if let Action::Fuse(k, l) = e.action {
            let qs = &table
                .get(&c.apply_fusion(k, l, Outcome::Success)?)
                .expect("in table")
                .quality;
            let qf = &table
                .get(&c.apply_fusion(k, l, Outcome::Failure)?)
                .expect("in table")
                .quality;
            win.record(*qs >= e.quality && e.quality >= *qf, || {
                format!("{c} under <{k},{l}>: Q_S={qs} Q={} Q_F={qf}", e.quality)
            });
        }
    }
    Ok(LemmaReport {
        max_length,
        ps: p.to_string(),
        checks: vec![more, win, cat, less, attempts],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::half;

    #[test]
    fn lemmas_hold_for_small_configurations() {
        let r = check_lemmas(8, &half()).unwrap();
        assert!(r.all_hold(), "{r:?}");
        assert!(r.checks.iter().all(|c| c.checked > 0));
    }
}
