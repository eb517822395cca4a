//! Classical control strategies.
//!
//! Stateless strategies ([`Strategy`]) look only at the anonymous
//! configuration. Stateful ones ([`StatefulStrategy`]) work in the identity
//! picture and carry their own memory, which is what insistence needs.
//! Every stateless strategy can be run as a stateful one through
//! [`Anonymous`].

use std::collections::{HashMap, HashSet};
use std::fmt::Debug;
use std::hash::Hash;
use std::io::{BufRead, Write};

use crate::config::{Action, Configuration, Event, IdentityConfiguration, IndexAction, Outcome};
use crate::error::{Error, Result, Violation};

/// A decision rule on anonymous configurations.
pub trait Strategy: Send + Sync {
    fn name(&self) -> String;
    fn decide(&self, config: &Configuration) -> Action;
}

impl<S: Strategy + ?Sized> Strategy for &S {
    fn name(&self) -> String {
        (**self).name()
    }
    fn decide(&self, config: &Configuration) -> Action {
        (**self).decide(config)
    }
}

impl<S: Strategy + ?Sized> Strategy for Box<S> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn decide(&self, config: &Configuration) -> Action {
        (**self).decide(config)
    }
}

/// A decision rule in the identity picture with explicit memory.
///
/// The strategy object itself is immutable and shareable; all per-run state
/// lives in `Memory`, which is threaded through by the caller.
pub trait StatefulStrategy: Send + Sync {
    type Memory: Clone + Eq + Hash + Debug + Send + Sync;

    fn name(&self) -> String;
    fn initial_memory(&self, initial: &IdentityConfiguration) -> Self::Memory;
    fn decide(&self, state: &IdentityConfiguration, memory: &Self::Memory) -> IndexAction;
    /// Memory after `action` on `before` produced `outcome` and led to `after`.
    fn update(
        &self,
        memory: &Self::Memory,
        before: &IdentityConfiguration,
        action: IndexAction,
        outcome: Outcome,
        after: &IdentityConfiguration,
    ) -> Self::Memory;
}

/// Fuse the two longest chains.
#[derive(Debug, Clone, Copy, Default)]
pub struct Greed;

/// Fuse the two shortest chains.
#[derive(Debug, Clone, Copy, Default)]
pub struct Modesty;

impl Strategy for Greed {
    fn name(&self) -> String {
        "greed".into()
    }

    fn decide(&self, c: &Configuration) -> Action {
        if c.is_terminal() {
            return Action::Stop;
        }
        let counts = c.counts();
        let &(k, nk) = counts.last().expect("non-terminal configuration has chains");
        let l = if nk >= 2 { k } else { counts[counts.len() - 2].0 };
        Action::fuse(k, l)
    }
}

impl Strategy for Modesty {
    fn name(&self) -> String {
        "modesty".into()
    }

    fn decide(&self, c: &Configuration) -> Action {
        if c.is_terminal() {
            return Action::Stop;
        }
        let counts = c.counts();
        let (k, nk) = counts[0];
        let l = if nk >= 2 { k } else { counts[1].0 };
        Action::fuse(k, l)
    }
}

/// Runs a stateless strategy in the identity picture.
///
/// `Fuse(k, l)` becomes the lowest-indexed chain of length `k` and the
/// lowest-indexed other chain of length `l`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Anonymous<S>(pub S);

impl<S: Strategy> StatefulStrategy for Anonymous<S> {
    type Memory = ();

    fn name(&self) -> String {
        self.0.name()
    }

    fn initial_memory(&self, _: &IdentityConfiguration) {}

    fn decide(&self, state: &IdentityConfiguration, _: &()) -> IndexAction {
        let action = self.0.decide(&state.to_configuration());
        locate(state.chains(), action)
    }

    fn update(&self, _: &(), _: &IdentityConfiguration, _: IndexAction, _: Outcome, _: &IdentityConfiguration) {}
}

// Maps an anonymous action onto positions within `chains`. An action that
// references missing chains maps to an out-of-range pair so validation still
// reports it.
fn locate(chains: &[u32], action: Action) -> IndexAction {
    match action {
        Action::Stop => IndexAction::Stop,
        Action::Fuse(k, l) => {
            let i = chains.iter().position(|&c| c == k);
            let j = i.and_then(|i| chains.iter().enumerate().position(|(idx, &c)| idx != i && c == l));
            match (i, j) {
                (Some(i), Some(j)) => IndexAction::Fuse(i.min(j), i.max(j)),
                _ => IndexAction::Fuse(usize::MAX, usize::MAX),
            }
        }
    }
}

/// Which stage a [`TwoStage`] run is in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    /// The inner strategy runs independently inside each block.
    Blocks,
    /// Surviving chains are fused insistently in pairs, round after round.
    Pairs,
}

/// Memory of a [`TwoStage`] run: the current stage and how many consecutive
/// chains of the identity list belong to each group.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroupLayout {
    pub stage: Stage,
    pub groups: Vec<u32>,
}

/// Blocked two-stage strategy.
///
/// Stage one splits the initial chains into consecutive blocks of `block`
/// chains (the last block may be shorter) and runs `inner` inside each block
/// until it holds at most one chain. Stage two fuses chain 1 with 2, 3 with 4
/// and so on, insistently: a pair is retried until it succeeds or one of its
/// chains is destroyed. Survivors are then renumbered and the pairing repeats
/// until at most one chain is left.
///
/// With `block = 8` and [`Modesty`] inside this is the Static strategy.
#[derive(Debug, Clone)]
pub struct TwoStage<S> {
    block: u32,
    inner: S,
}

impl<S: Strategy> TwoStage<S> {
    pub fn new(block: u32, inner: S) -> Result<Self> {
        if block < 2 {
            return Err(Error::Domain(format!("block size must be at least 2, got {block}")));
        }
        Ok(Self { block, inner })
    }

    pub fn block(&self) -> u32 {
        self.block
    }

    pub fn inner(&self) -> &S {
        &self.inner
    }

    // Applies stage transitions until some group can act or the run is over.
    fn settle(&self, mut layout: GroupLayout, state: &IdentityConfiguration) -> GroupLayout {
        layout.groups.retain(|&g| g > 0);
        if layout.groups.iter().any(|&g| g >= 2) || state.len() <= 1 {
            return layout;
        }
        let n = state.len() as u32;
        let mut groups = vec![2; (n / 2) as usize];
        if n % 2 == 1 {
            groups.push(1);
        }
        GroupLayout {
            stage: Stage::Pairs,
            groups,
        }
    }
}

/// The Static strategy: Modesty in blocks of eight EPR pairs, then insistent
/// pairwise fusion.
pub fn static_strategy() -> TwoStage<Modesty> {
    TwoStage {
        block: 8,
        inner: Modesty,
    }
}

impl<S: Strategy> StatefulStrategy for TwoStage<S> {
    type Memory = GroupLayout;

    fn name(&self) -> String {
        if self.block == 8 && self.inner.name() == "modesty" {
            "static".into()
        } else {
            format!("two-stage({},{})", self.block, self.inner.name())
        }
    }

    fn initial_memory(&self, initial: &IdentityConfiguration) -> GroupLayout {
        let n = initial.len() as u32;
        let mut groups = vec![self.block; (n / self.block) as usize];
        if !n.is_multiple_of(self.block) {
            groups.push(n % self.block);
        }
        self.settle(
            GroupLayout {
                stage: Stage::Blocks,
                groups,
            },
            initial,
        )
    }

    fn decide(&self, state: &IdentityConfiguration, layout: &GroupLayout) -> IndexAction {
        let mut start = 0usize;
        for &g in &layout.groups {
            let size = g as usize;
            if size >= 2 {
                return match layout.stage {
                    Stage::Pairs => IndexAction::Fuse(start, start + 1),
                    Stage::Blocks => {
                        let chains = &state.chains()[start..start + size];
                        let action = self.inner.decide(&Configuration::from_lengths(chains.iter().copied()));
                        match locate(chains, action) {
                            IndexAction::Fuse(i, j) if j < size => IndexAction::Fuse(start + i, start + j),
                            IndexAction::Stop => IndexAction::Stop,
                            other => other,
                        }
                    }
                };
            }
            start += size;
        }
        IndexAction::Stop
    }

    fn update(
        &self,
        layout: &GroupLayout,
        before: &IdentityConfiguration,
        action: IndexAction,
        outcome: Outcome,
        after: &IdentityConfiguration,
    ) -> GroupLayout {
        let mut next = layout.clone();
        if let IndexAction::Fuse(i, j) = action {
            let mut start = 0usize;
            for g in next.groups.iter_mut() {
                let end = start + *g as usize;
                if i >= start && i < end {
                    let lost = match outcome {
                        Outcome::Success => 1,
                        Outcome::Failure => [i, j].iter().filter(|&&x| before.chains()[x] == 1).count() as u32,
                    };
                    *g -= lost;
                    break;
                }
                start = end;
            }
        }
        self.settle(next, after)
    }
}

/// Strategy given by an explicit table from configurations to actions.
#[derive(Debug, Clone, Default)]
pub struct LookupStrategy {
    name: String,
    table: HashMap<Configuration, Action>,
}

impl LookupStrategy {
    pub fn new(name: impl Into<String>, table: HashMap<Configuration, Action>) -> Self {
        Self {
            name: name.into(),
            table,
        }
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn get(&self, c: &Configuration) -> Option<Action> {
        self.table.get(c).copied()
    }

    pub fn insert(&mut self, c: Configuration, action: Action) {
        self.table.insert(c, action);
    }

    /// Writes one `key<TAB>k,l` or `key<TAB>stop` line per entry, ordered by
    /// vertex count and key.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let mut entries: Vec<_> = self.table.iter().collect();
        entries.sort_by_cached_key(|(c, _)| (c.vertex_count(), c.canonical_key()));
        for (c, a) in entries {
            writeln!(w, "{}\t{}", c.canonical_key(), a)?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(name: impl Into<String>, r: R) -> Result<Self> {
        let mut table = HashMap::new();
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let (key, action) = line.split_once('\t').ok_or_else(|| Error::Parse {
                line: lineno,
                message: "expected `key<TAB>action`".into(),
            })?;
            let c = Configuration::parse_key(key).map_err(|e| Error::Parse {
                line: lineno,
                message: e.to_string(),
            })?;
            let a: Action = action.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("invalid action `{action}`"),
            })?;
            table.insert(c, a);
        }
        Ok(Self::new(name, table))
    }
}

impl Strategy for LookupStrategy {
    fn name(&self) -> String {
        self.name.clone()
    }

    /// Configurations missing from the table yield `Stop`; validation flags
    /// that as a premature stop when more than one chain remains.
    fn decide(&self, config: &Configuration) -> Action {
        self.table.get(config).copied().unwrap_or(Action::Stop)
    }
}

/// Outcome of an exhaustive validity check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub states_visited: usize,
    pub max_depth: usize,
}

/// Walks the whole event tree of a stateless strategy from `initial` and
/// checks both validity rules and termination. The first violation found in
/// depth-first order (success branch first) is reported with its event.
pub fn validate_strategy<S: Strategy + ?Sized>(s: &S, initial: &Configuration) -> Result<ValidationReport> {
    let horizon = initial.vertex_count() as usize;
    let mut visited = HashSet::new();
    let mut event = Event::default();
    let mut max_depth = 0;
    walk_anonymous(s, initial, &mut event, horizon, &mut visited, &mut max_depth)?;
    Ok(ValidationReport {
        states_visited: visited.len(),
        max_depth,
    })
}

fn walk_anonymous<S: Strategy + ?Sized>(
    s: &S,
    c: &Configuration,
    event: &mut Event,
    horizon: usize,
    visited: &mut HashSet<Configuration>,
    max_depth: &mut usize,
) -> Result<()> {
    let fail = |event: &Event, violation| Error::StrategyViolation {
        strategy: s.name(),
        event: event.to_string(),
        violation,
    };
    *max_depth = (*max_depth).max(event.len());
    if event.len() > horizon {
        return Err(fail(event, Violation::NonTerminating));
    }
    if !visited.insert(c.clone()) {
        return Ok(());
    }
    match s.decide(c) {
        Action::Stop => {
            if c.is_terminal() {
                Ok(())
            } else {
                Err(fail(event, Violation::PrematureStop))
            }
        }
        Action::Fuse(k, l) => {
            if !c.can_fuse(k, l) {
                return Err(fail(event, Violation::NullFusion { k, l }));
            }
            for o in Outcome::BOTH {
                let next = c.apply_fusion(k, l, o)?;
                if next.vertex_count() >= c.vertex_count() {
                    return Err(fail(event, Violation::NonTerminating));
                }
                event.push(o);
                walk_anonymous(s, &next, event, horizon, visited, max_depth)?;
                event.pop();
            }
            Ok(())
        }
    }
}

/// Validity check for a stateful strategy, on `(state, memory)` pairs.
pub fn validate_stateful<S: StatefulStrategy>(s: &S, initial: &IdentityConfiguration) -> Result<ValidationReport> {
    let horizon = initial.to_configuration().vertex_count() as usize;
    let mut visited = HashSet::new();
    let mut event = Event::default();
    let mut max_depth = 0;
    let memory = s.initial_memory(initial);
    walk_stateful(s, initial, &memory, &mut event, horizon, &mut visited, &mut max_depth)?;
    Ok(ValidationReport {
        states_visited: visited.len(),
        max_depth,
    })
}

fn walk_stateful<S: StatefulStrategy>(
    s: &S,
    state: &IdentityConfiguration,
    memory: &S::Memory,
    event: &mut Event,
    horizon: usize,
    visited: &mut HashSet<(IdentityConfiguration, S::Memory)>,
    max_depth: &mut usize,
) -> Result<()> {
    let fail = |event: &Event, violation| Error::StrategyViolation {
        strategy: s.name(),
        event: event.to_string(),
        violation,
    };
    *max_depth = (*max_depth).max(event.len());
    if event.len() > horizon {
        return Err(fail(event, Violation::NonTerminating));
    }
    if !visited.insert((state.clone(), memory.clone())) {
        return Ok(());
    }
    let action = s.decide(state, memory);
    match action {
        IndexAction::Stop => {
            if state.len() <= 1 {
                Ok(())
            } else {
                Err(fail(event, Violation::PrematureStop))
            }
        }
        IndexAction::Fuse(i, j) => {
            let n = state.len();
            if i == j || i >= n || j >= n {
                let len = |x: usize| state.chains().get(x).copied().unwrap_or(0);
                return Err(fail(event, Violation::NullFusion { k: len(i), l: len(j) }));
            }
            for o in Outcome::BOTH {
                let next = state.apply_fusion(i, j, o)?;
                let next_memory = s.update(memory, state, action, o, &next);
                event.push(o);
                walk_stateful(s, &next, &next_memory, event, horizon, visited, max_depth)?;
                event.pop();
            }
            Ok(())
        }
    }
}
