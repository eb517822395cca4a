//! Exact expectations for fixed strategies and the globally optimal strategy.
//!
//! All recursions run over any [`Scalar`]; with [`ExactValue`] and a rational
//! success probability the results are exact.

use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::config::{
    configurations_by_level, Action, Configuration, Event, IdentityConfiguration, IndexAction, Outcome,
};
use crate::error::{Error, Result, Violation};
use crate::strategy::{LookupStrategy, StatefulStrategy, Strategy};
use crate::value::{format_fraction, parse_exact, ExactValue, Scalar};

/// Largest total length the memo-free event-tree oracle accepts.
pub const EVENT_TREE_MAX_LENGTH: u32 = 16;

/// Expected final total length and expected number of fusion attempts.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation<T> {
    pub quality: T,
    pub attempts: T,
}

impl<T: Scalar> Evaluation<T> {
    fn terminal(c: &Configuration) -> Self {
        Evaluation {
            quality: T::from_u64(c.total_length()),
            attempts: T::zero(),
        }
    }

    fn combine(p: &T, q: &T, success: &Self, failure: &Self) -> Self {
        Evaluation {
            quality: p.clone() * success.quality.clone() + q.clone() * failure.quality.clone(),
            attempts: T::one() + p.clone() * success.attempts.clone() + q.clone() * failure.attempts.clone(),
        }
    }
}

/// Memoised evaluator for a stateless strategy. The memo is keyed on the
/// anonymous configuration and is reused across calls, which makes sweeps
/// over `N` cheap.
pub struct StrategyEvaluator<'a, S: ?Sized, T> {
    strategy: &'a S,
    p: T,
    q: T,
    memo: HashMap<Configuration, Evaluation<T>>,
}

impl<'a, S: Strategy + ?Sized, T: Scalar> StrategyEvaluator<'a, S, T> {
    pub fn new(strategy: &'a S, p: T) -> Self {
        let q = T::one() - p.clone();
        Self {
            strategy,
            p,
            q,
            memo: HashMap::new(),
        }
    }

    pub fn evaluate(&mut self, c: &Configuration) -> Result<Evaluation<T>> {
        let mut event = Event::default();
        self.eval(c, &mut event)
    }

    pub fn memo_len(&self) -> usize {
        self.memo.len()
    }

    fn eval(&mut self, c: &Configuration, event: &mut Event) -> Result<Evaluation<T>> {
        if let Some(v) = self.memo.get(c) {
            return Ok(v.clone());
        }
        let violation = |v| Error::StrategyViolation {
            strategy: self.strategy.name(),
            event: event.to_string(),
            violation: v,
        };
        let value = match self.strategy.decide(c) {
            Action::Stop if c.is_terminal() => Evaluation::terminal(c),
            Action::Stop => return Err(violation(Violation::PrematureStop)),
            Action::Fuse(k, l) => {
                if !c.can_fuse(k, l) {
                    return Err(violation(Violation::NullFusion { k, l }));
                }
                let s = c.apply_fusion(k, l, Outcome::Success)?;
                let f = c.apply_fusion(k, l, Outcome::Failure)?;
                event.push(Outcome::Success);
                let vs = self.eval(&s, event)?;
                event.pop();
                event.push(Outcome::Failure);
                let vf = self.eval(&f, event)?;
                event.pop();
                Evaluation::combine(&self.p, &self.q, &vs, &vf)
            }
        };
        self.memo.insert(c.clone(), value.clone());
        Ok(value)
    }
}

/// Expected final length and attempts of a stateless strategy from `c0`.
pub fn evaluate_strategy<S: Strategy + ?Sized, T: Scalar>(s: &S, c0: &Configuration, p: &T) -> Result<Evaluation<T>> {
    StrategyEvaluator::new(s, p.clone()).evaluate(c0)
}

/// Expected final total length `Q̃_S(C0)`.
pub fn strategy_quality<S: Strategy + ?Sized, T: Scalar>(s: &S, c0: &Configuration, p: &T) -> Result<T> {
    evaluate_strategy(s, c0, p).map(|e| e.quality)
}

/// Expected number of attempted fusions `⟨T⟩`.
pub fn expected_attempts<S: Strategy + ?Sized, T: Scalar>(s: &S, c0: &Configuration, p: &T) -> Result<T> {
    evaluate_strategy(s, c0, p).map(|e| e.attempts)
}

/// Evaluation of a stateful strategy, memoised on `(identity state, memory)`.
pub fn evaluate_stateful<S: StatefulStrategy, T: Scalar>(
    s: &S,
    initial: &IdentityConfiguration,
    p: &T,
) -> Result<Evaluation<T>> {
    let q = T::one() - p.clone();
    let mut memo = HashMap::new();
    let memory = s.initial_memory(initial);
    let mut event = Event::default();
    let horizon = initial.to_configuration().vertex_count() as usize;
    eval_stateful(s, initial, &memory, p, &q, &mut memo, &mut event, horizon)
}

#[allow(clippy::too_many_arguments)]
fn eval_stateful<S: StatefulStrategy, T: Scalar>(
    s: &S,
    state: &IdentityConfiguration,
    memory: &S::Memory,
    p: &T,
    q: &T,
    memo: &mut HashMap<(IdentityConfiguration, S::Memory), Evaluation<T>>,
    event: &mut Event,
    horizon: usize,
) -> Result<Evaluation<T>> {
    let key = (state.clone(), memory.clone());
    if let Some(v) = memo.get(&key) {
        return Ok(v.clone());
    }
    let violation = |event: &Event, v| Error::StrategyViolation {
        strategy: s.name(),
        event: event.to_string(),
        violation: v,
    };
    if event.len() > horizon {
        return Err(violation(event, Violation::NonTerminating));
    }
    let action = s.decide(state, memory);
    let value = match action {
        IndexAction::Stop if state.len() <= 1 => Evaluation {
            quality: T::from_u64(state.total_length()),
            attempts: T::zero(),
        },
        IndexAction::Stop => return Err(violation(event, Violation::PrematureStop)),
        IndexAction::Fuse(i, j) => {
            let n = state.len();
            if i == j || i >= n || j >= n {
                let len = |x: usize| state.chains().get(x).copied().unwrap_or(0);
                return Err(violation(event, Violation::NullFusion { k: len(i), l: len(j) }));
            }
            let mut branch = |o: Outcome, event: &mut Event| -> Result<Evaluation<T>> {
                let next = state.apply_fusion(i, j, o)?;
                let next_memory = s.update(memory, state, action, o, &next);
                event.push(o);
                let v = eval_stateful(s, &next, &next_memory, p, q, memo, event, horizon);
                event.pop();
                v
            };
            let vs = branch(Outcome::Success, event)?;
            let vf = branch(Outcome::Failure, event)?;
            Evaluation::combine(p, q, &vs, &vf)
        }
    };
    memo.insert(key, value.clone());
    Ok(value)
}

/// The optimal action on `c` and its value, given the values of all
/// configurations reachable in one step. Ties go to the lexicographically
/// smallest `(k, l)` with `k ≤ l`.
pub fn best_action<T, F>(c: &Configuration, p: &T, q: &T, mut value_of: F) -> (Evaluation<T>, Action)
where
    T: Scalar,
    F: FnMut(&Configuration) -> Evaluation<T>,
{
    if c.is_terminal() {
        return (Evaluation::terminal(c), Action::Stop);
    }
    let mut best: Option<(Evaluation<T>, Action)> = None;
    for (k, l) in c.fusion_pairs() {
        let s = c.apply_fusion(k, l, Outcome::Success).expect("feasible pair");
        let f = c.apply_fusion(k, l, Outcome::Failure).expect("feasible pair");
        let v = Evaluation::combine(p, q, &value_of(&s), &value_of(&f));
        let better = match &best {
            None => true,
            Some((b, _)) => v.quality > b.quality,
        };
        if better {
            best = Some((v, Action::fuse(k, l)));
        }
    }
    best.expect("non-terminal configuration has a feasible fusion")
}

/// Memoised optimal-strategy evaluator (the quality `Q`).
pub struct OptimalEvaluator<T> {
    p: T,
    q: T,
    memo: HashMap<Configuration, (Evaluation<T>, Action)>,
}

impl<T: Scalar> OptimalEvaluator<T> {
    pub fn new(p: T) -> Self {
        let q = T::one() - p.clone();
        Self {
            p,
            q,
            memo: HashMap::new(),
        }
    }

    /// Quality and expected attempts of the optimal strategy, and its action.
    pub fn evaluate(&mut self, c: &Configuration) -> (Evaluation<T>, Action) {
        if let Some(v) = self.memo.get(c) {
            return v.clone();
        }
        let mut successors = HashMap::new();
        if !c.is_terminal() {
            for (k, l) in c.fusion_pairs() {
                for o in Outcome::BOTH {
                    let next = c.apply_fusion(k, l, o).expect("feasible pair");
                    if let Entry::Vacant(slot) = successors.entry(next) {
                        let v = self.evaluate(slot.key()).0;
                        slot.insert(v);
                    }
                }
            }
        }
        let result = best_action(c, &self.p, &self.q, |n| successors[n].clone());
        self.memo.insert(c.clone(), result.clone());
        result
    }

    pub fn quality(&mut self, c: &Configuration) -> T {
        self.evaluate(c).0.quality
    }
}

/// The quality `Q(C0)`: the best expected final length over all strategies.
pub fn optimal_quality<T: Scalar>(c0: &Configuration, p: &T) -> T {
    OptimalEvaluator::new(p.clone()).quality(c0)
}

/// Optimal quality together with the optimal strategy's expected attempts.
pub fn optimal_evaluation<T: Scalar>(c0: &Configuration, p: &T) -> Evaluation<T> {
    OptimalEvaluator::new(p.clone()).evaluate(c0).0
}

/// Entry of a [`QualityTable`].
#[derive(Debug, Clone, PartialEq)]
pub struct TableEntry<T> {
    pub quality: T,
    pub attempts: T,
    pub action: Action,
}

/// Optimal value and action for every configuration of total length ≤ `n`.
#[derive(Debug, Clone)]
pub struct QualityTable<T> {
    n: u32,
    entries: HashMap<Configuration, TableEntry<T>>,
}

/// Builds the optimal table level by level in vertex count.
///
/// Each level depends only on lower levels, so its entries are computed in
/// parallel against a read-only view of the table. `budget` caps the number
/// of entries; exceeding it reports the level that could not be completed.
pub fn build_quality_table<T: Scalar>(n: u32, p: &T, budget: Option<usize>) -> Result<QualityTable<T>> {
    let q = T::one() - p.clone();
    let mut entries: HashMap<Configuration, TableEntry<T>> = HashMap::new();
    for (level, configs) in configurations_by_level(n) {
        if let Some(b) = budget {
            if entries.len() + configs.len() > b {
                return Err(Error::BudgetExceeded {
                    budget: b,
                    level: level as u32,
                    completed: entries.len(),
                });
            }
        }
        let computed: Vec<(Configuration, TableEntry<T>)> = configs
            .into_par_iter()
            .map(|c| {
                let (v, action) = best_action(&c, p, &q, |next| {
                    let e = &entries[next];
                    Evaluation {
                        quality: e.quality.clone(),
                        attempts: e.attempts.clone(),
                    }
                });
                (
                    c,
                    TableEntry {
                        quality: v.quality,
                        attempts: v.attempts,
                        action,
                    },
                )
            })
            .collect();
        entries.extend(computed);
    }
    Ok(QualityTable { n, entries })
}

impl<T: Scalar> QualityTable<T> {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, c: &Configuration) -> Option<&TableEntry<T>> {
        self.entries.get(c)
    }

    pub fn quality(&self, c: &Configuration) -> Option<&T> {
        self.entries.get(c).map(|e| &e.quality)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Configuration, &TableEntry<T>)> {
        self.entries.iter()
    }

    /// Replays the table's actions as a lookup strategy.
    pub fn to_lookup_strategy(&self) -> LookupStrategy {
        LookupStrategy::new(
            "optimal",
            self.entries.iter().map(|(c, e)| (c.clone(), e.action)).collect(),
        )
    }

    fn sorted(&self) -> Vec<(&Configuration, &TableEntry<T>)> {
        let mut v: Vec<_> = self.entries.iter().collect();
        v.sort_by_cached_key(|(c, _)| (c.vertex_count(), c.canonical_key()));
        v
    }
}

impl QualityTable<ExactValue> {
    /// Writes the header `N=<N> ps=<num>/<den>` and one
    /// `key<TAB>num/den<TAB>k,l|stop` line per configuration.
    pub fn write_to<W: Write>(&self, ps: &ExactValue, mut w: W) -> Result<()> {
        writeln!(w, "N={} ps={}", self.n, format_fraction(ps))?;
        for (c, e) in self.sorted() {
            writeln!(
                w,
                "{}\t{}\t{}",
                c.canonical_key(),
                format_fraction(&e.quality),
                e.action
            )?;
        }
        Ok(())
    }

    /// Reads a table written by [`QualityTable::write_to`]. Expected attempts
    /// are not stored in the file; at `ps = 1/2` they are recovered as
    /// `L(C) − Q(C)`, otherwise as `(L(C) − Q(C)) / (2(1 − ps))`.
    pub fn read_from<R: BufRead>(r: R) -> Result<(Self, ExactValue)> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::Parse {
            line: 1,
            message: "missing header".into(),
        })??;
        let bad_header = || Error::Parse {
            line: 1,
            message: format!("invalid header `{header}`"),
        };
        let (n_part, ps_part) = header.split_once(' ').ok_or_else(bad_header)?;
        let n: u32 = n_part
            .strip_prefix("N=")
            .and_then(|s| s.parse().ok())
            .ok_or_else(bad_header)?;
        let ps = ps_part
            .strip_prefix("ps=")
            .and_then(|s| parse_exact(s).ok())
            .ok_or_else(bad_header)?;
        let loss_per_attempt = (ExactValue::from_u64(1) - ps.clone()) * ExactValue::from_u64(2);
        let mut entries = HashMap::new();
        for (idx, line) in lines.enumerate() {
            let line = line?;
            let lineno = idx + 2;
            let err = |message: String| Error::Parse { line: lineno, message };
            let mut fields = line.split('\t');
            let (Some(key), Some(value), Some(action), None) =
                (fields.next(), fields.next(), fields.next(), fields.next())
            else {
                return Err(err("expected three tab-separated fields".into()));
            };
            let c = Configuration::parse_key(key).map_err(|e| err(e.to_string()))?;
            let quality = parse_exact(value).map_err(|e| err(e.to_string()))?;
            let action: Action = action.parse().map_err(|_| err(format!("invalid action `{action}`")))?;
            let lost = ExactValue::from_u64(c.total_length()) - quality.clone();
            let attempts = if num_traits::Zero::is_zero(&loss_per_attempt) {
                ExactValue::from_u64(0)
            } else {
                lost / loss_per_attempt.clone()
            };
            entries.insert(
                c,
                TableEntry {
                    quality,
                    attempts,
                    action,
                },
            );
        }
        Ok((QualityTable { n, entries }, ps))
    }
}

/// Result of exhaustively enumerating a strategy's event tree.
#[derive(Debug, Clone)]
pub struct EventTreeOutcome<T> {
    /// Probability of each final (anonymous) configuration.
    pub distribution: BTreeMap<Configuration, T>,
    pub mean_length: T,
    pub mean_attempts: T,
    /// Number of complete event strings.
    pub leaves: usize,
}

/// Ground-truth oracle: enumerates every event string with its exact
/// probability, without any memoisation.
pub fn event_tree_oracle<S: StatefulStrategy, T: Scalar>(
    s: &S,
    initial: &IdentityConfiguration,
    p: &T,
) -> Result<EventTreeOutcome<T>> {
    let total = initial.total_length();
    if total > u64::from(EVENT_TREE_MAX_LENGTH) {
        return Err(Error::SizeGuard {
            limit: EVENT_TREE_MAX_LENGTH,
            got: total as u32,
        });
    }
    let q = T::one() - p.clone();
    let mut out = EventTreeOutcome {
        distribution: BTreeMap::new(),
        mean_length: T::zero(),
        mean_attempts: T::zero(),
        leaves: 0,
    };
    let memory = s.initial_memory(initial);
    let mut event = Event::default();
    let horizon = initial.to_configuration().vertex_count() as usize;
    enumerate_events(s, initial, &memory, T::one(), p, &q, &mut event, horizon, &mut out)?;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn enumerate_events<S: StatefulStrategy, T: Scalar>(
    s: &S,
    state: &IdentityConfiguration,
    memory: &S::Memory,
    weight: T,
    p: &T,
    q: &T,
    event: &mut Event,
    horizon: usize,
    out: &mut EventTreeOutcome<T>,
) -> Result<()> {
    let violation = |event: &Event, v| Error::StrategyViolation {
        strategy: s.name(),
        event: event.to_string(),
        violation: v,
    };
    if event.len() > horizon {
        return Err(violation(event, Violation::NonTerminating));
    }
    let action = s.decide(state, memory);
    match action {
        IndexAction::Stop if state.len() <= 1 => {
            let final_config = state.to_configuration();
            out.mean_length = out.mean_length.clone() + weight.clone() * T::from_u64(state.total_length());
            out.mean_attempts = out.mean_attempts.clone() + weight.clone() * T::from_u64(event.len() as u64);
            let slot = out.distribution.entry(final_config).or_insert_with(T::zero);
            *slot = slot.clone() + weight;
            out.leaves += 1;
            Ok(())
        }
        IndexAction::Stop => Err(violation(event, Violation::PrematureStop)),
        IndexAction::Fuse(i, j) => {
            let n = state.len();
            if i == j || i >= n || j >= n {
                let len = |x: usize| state.chains().get(x).copied().unwrap_or(0);
                return Err(violation(event, Violation::NullFusion { k: len(i), l: len(j) }));
            }
            for (o, w) in [(Outcome::Success, p), (Outcome::Failure, q)] {
                if w.is_zero() {
                    continue;
                }
                let next = state.apply_fusion(i, j, o)?;
                let next_memory = s.update(memory, state, action, o, &next);
                event.push(o);
                enumerate_events(
                    s,
                    &next,
                    &next_memory,
                    weight.clone() * w.clone(),
                    p,
                    q,
                    event,
                    horizon,
                    out,
                )?;
                event.pop();
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategy::{Anonymous, Greed, Modesty};
    use crate::value::{exact, exact_int, half};

    #[test]
    fn modesty_on_four_pairs() {
        let v = strategy_quality(&Modesty, &Configuration::epr_pairs(4), &half()).unwrap();
        assert_eq!(v, exact(13, 8));
    }

    #[test]
    fn single_chain_stops_immediately() {
        for p in [exact(1, 3), half(), exact_int(1)] {
            let e = evaluate_strategy(&Greed, &Configuration::single(5), &p).unwrap();
            assert_eq!(e.quality, exact_int(5));
            assert_eq!(e.attempts, exact_int(0));
        }
    }

    #[test]
    fn greed_on_four_pairs_matches_event_tree() {
        let oracle = event_tree_oracle(&Anonymous(Greed), &IdentityConfiguration::epr_pairs(4), &half()).unwrap();
        assert_eq!(oracle.mean_length, exact(3, 2));
        let v = strategy_quality(&Greed, &Configuration::epr_pairs(4), &half()).unwrap();
        assert_eq!(v, exact(3, 2));
    }

    #[test]
    fn optimal_benchmarks() {
        assert_eq!(optimal_quality(&Configuration::epr_pairs(4), &half()), exact(13, 8));
        assert_eq!(optimal_quality(&Configuration::epr_pairs(8), &half()), exact(649, 256));
        assert_eq!(
            optimal_quality(&Configuration::from_lengths([3, 3]), &half()),
            exact(17, 4)
        );
    }

    #[test]
    fn optimal_attempts_on_two_pairs() {
        let e = optimal_evaluation(&Configuration::epr_pairs(2), &half());
        assert_eq!(e.attempts, exact_int(1));
    }

    #[test]
    fn table_budget() {
        match build_quality_table(6, &half(), Some(5)) {
            Err(Error::BudgetExceeded {
                budget: 5,
                level,
                completed,
            }) => {
                assert!(completed <= 5);
                assert!(level >= 2);
            }
            other => panic!("unexpected {:?}", other.map(|t| t.len())),
        }
        assert_eq!(build_quality_table(4, &half(), None).unwrap().len(), 12);
    }

    #[test]
    fn table_file_round_trip() {
        let t = build_quality_table(5, &half(), None).unwrap();
        let mut buf = Vec::new();
        t.write_to(&half(), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("N=5 ps=1/2\n\t0/1\tstop\n"));
        assert!(text.contains("1^4\t13/8\t1,1\n"));
        let (back, ps) = QualityTable::read_from(buf.as_slice()).unwrap();
        assert_eq!(ps, half());
        assert_eq!(back.len(), t.len());
        for (c, e) in t.iter() {
            assert_eq!(back.get(c).unwrap(), e);
        }
        let mut again = Vec::new();
        back.write_to(&ps, &mut again).unwrap();
        assert_eq!(again, buf);
    }

    #[test]
    fn oracle_size_guard() {
        let r = event_tree_oracle(&Anonymous(Modesty), &IdentityConfiguration::epr_pairs(17), &half());
        assert!(matches!(r, Err(Error::SizeGuard { .. })));
    }
}
