//! Configurations of linear chains and the elementary fusion rule.
//!
//! A chain is characterised by its number of edges. The anonymous picture
//! ([`Configuration`]) keeps only how many chains of each length exist; the
//! identity picture ([`IdentityConfiguration`]) keeps an ordered list so that
//! stateful strategies can refer to individual chains.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use crate::error::{Error, Result};

/// Result of one fusion attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Success,
    Failure,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Success, Outcome::Failure];

    pub fn symbol(self) -> char {
        match self {
            Outcome::Success => 'S',
            Outcome::Failure => 'F',
        }
    }
}

/// A string of outcomes, one per non-stop action taken so far.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Event(pub Vec<Outcome>);

impl Event {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, o: Outcome) {
        self.0.push(o);
    }

    pub fn pop(&mut self) -> Option<Outcome> {
        self.0.pop()
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ε");
        }
        for o in &self.0 {
            write!(f, "{}", o.symbol())?;
        }
        Ok(())
    }
}

/// Decision in the anonymous picture: fuse a chain of length `k` with one of
/// length `l`, or stop. `Fuse(k, l)` and `Fuse(l, k)` are the same action.
#[derive(Debug, Clone, Copy, Eq)]
pub enum Action {
    Fuse(u32, u32),
    Stop,
}

impl Action {
    /// Fusion of lengths `k` and `l`, stored with the smaller length first.
    pub fn fuse(k: u32, l: u32) -> Self {
        Action::Fuse(k.min(l), k.max(l))
    }

    fn normalized(self) -> Self {
        match self {
            Action::Fuse(k, l) => Action::fuse(k, l),
            Action::Stop => Action::Stop,
        }
    }
}

impl PartialEq for Action {
    fn eq(&self, other: &Self) -> bool {
        match (self.normalized(), other.normalized()) {
            (Action::Fuse(a, b), Action::Fuse(c, d)) => a == c && b == d,
            (Action::Stop, Action::Stop) => true,
            _ => false,
        }
    }
}

impl Hash for Action {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self.normalized() {
            Action::Fuse(k, l) => {
                0u8.hash(state);
                k.hash(state);
                l.hash(state);
            }
            Action::Stop => 1u8.hash(state),
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.normalized() {
            Action::Fuse(k, l) => write!(f, "{k},{l}"),
            Action::Stop => f.write_str("stop"),
        }
    }
}

impl FromStr for Action {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "stop" {
            return Ok(Action::Stop);
        }
        let bad = || Error::Parse {
            line: 0,
            message: format!("invalid action `{s}`"),
        };
        let (k, l) = s.split_once(',').ok_or_else(bad)?;
        let k: u32 = k.trim().parse().map_err(|_| bad())?;
        let l: u32 = l.trim().parse().map_err(|_| bad())?;
        if k == 0 || l == 0 {
            return Err(bad());
        }
        Ok(Action::fuse(k, l))
    }
}

/// Decision in the identity picture: fuse the chains at two positions, or stop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IndexAction {
    Fuse(usize, usize),
    Stop,
}

/// Anonymous configuration: number of chains per length.
///
/// Entries are kept sorted by length and every stored count is positive, so
/// equal multisets compare and hash equal.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    counts: Vec<(u32, u32)>,
}

impl Configuration {
    /// The empty configuration (every chain destroyed).
    pub fn empty() -> Self {
        Self::default()
    }

    /// `n` EPR pairs, i.e. `n·e_1`.
    pub fn epr_pairs(n: u32) -> Self {
        Self::from_counts([(1, n)])
    }

    /// A single chain of `len` edges, `e_len`.
    pub fn single(len: u32) -> Self {
        Self::from_counts([(len, 1)])
    }

    /// Builds a configuration from chain lengths; zero lengths are dropped.
    pub fn from_lengths<I: IntoIterator<Item = u32>>(lengths: I) -> Self {
        let mut c = Self::empty();
        for len in lengths {
            c.add_chain(len);
        }
        c
    }

    /// Builds a configuration from `(length, count)` pairs in any order.
    pub fn from_counts<I: IntoIterator<Item = (u32, u32)>>(counts: I) -> Self {
        let mut c = Self::empty();
        for (len, n) in counts {
            for _ in 0..n {
                c.add_chain(len);
            }
        }
        c
    }

    /// `(length, count)` pairs in increasing length.
    pub fn counts(&self) -> &[(u32, u32)] {
        &self.counts
    }

    pub fn count(&self, len: u32) -> u32 {
        match self.counts.binary_search_by_key(&len, |&(l, _)| l) {
            Ok(i) => self.counts[i].1,
            Err(_) => 0,
        }
    }

    /// Number of chains, `Σ_i C_i`.
    pub fn chain_count(&self) -> u32 {
        self.counts.iter().map(|&(_, n)| n).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// At most one chain left: every valid strategy stops here.
    pub fn is_terminal(&self) -> bool {
        self.chain_count() <= 1
    }

    /// Total number of edges, `L(C) = Σ_i i·C_i`.
    pub fn total_length(&self) -> u64 {
        self.counts.iter().map(|&(l, n)| u64::from(l) * u64::from(n)).sum()
    }

    /// Number of vertices, `V(C) = Σ_i C_i·(i+1)`.
    pub fn vertex_count(&self) -> u64 {
        self.counts
            .iter()
            .map(|&(l, n)| (u64::from(l) + 1) * u64::from(n))
            .sum()
    }

    pub fn min_length(&self) -> Option<u32> {
        self.counts.first().map(|&(l, _)| l)
    }

    pub fn max_length(&self) -> Option<u32> {
        self.counts.last().map(|&(l, _)| l)
    }

    /// Chain lengths with multiplicity, shortest first.
    pub fn lengths(&self) -> impl Iterator<Item = u32> + '_ {
        self.counts
            .iter()
            .flat_map(|&(l, n)| std::iter::repeat_n(l, n as usize))
    }

    /// Adds one chain of length `len`; a zero length is ignored.
    pub fn add_chain(&mut self, len: u32) {
        if len == 0 {
            return;
        }
        match self.counts.binary_search_by_key(&len, |&(l, _)| l) {
            Ok(i) => self.counts[i].1 += 1,
            Err(i) => self.counts.insert(i, (len, 1)),
        }
    }

    /// Removes one chain of length `len`; returns `false` if none exists.
    pub fn remove_chain(&mut self, len: u32) -> bool {
        match self.counts.binary_search_by_key(&len, |&(l, _)| l) {
            Ok(i) => {
                self.counts[i].1 -= 1;
                if self.counts[i].1 == 0 {
                    self.counts.remove(i);
                }
                true
            }
            Err(_) => false,
        }
    }

    /// `C + e_len`.
    pub fn with_chain(&self, len: u32) -> Self {
        let mut c = self.clone();
        c.add_chain(len);
        c
    }

    /// `C − e_len`, or `None` if there is no such chain.
    pub fn without_chain(&self, len: u32) -> Option<Self> {
        let mut c = self.clone();
        c.remove_chain(len).then_some(c)
    }

    /// Whether a fusion of lengths `k` and `l` references existing chains.
    pub fn can_fuse(&self, k: u32, l: u32) -> bool {
        if k == l {
            self.count(k) >= 2
        } else {
            self.count(k) >= 1 && self.count(l) >= 1
        }
    }

    /// All feasible fusions `(k, l)` with `k ≤ l`, in lexicographic order.
    pub fn fusion_pairs(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for (i, &(k, nk)) in self.counts.iter().enumerate() {
            if nk >= 2 {
                out.push((k, k));
            }
            for &(l, _) in &self.counts[i + 1..] {
                out.push((k, l));
            }
        }
        out
    }

    /// Applies the elementary rule to chains of lengths `k` and `l`.
    ///
    /// Success merges them into one chain of `k + l` edges. Failure removes
    /// one edge from each, and a chain left with no edges disappears.
    pub fn apply_fusion(&self, k: u32, l: u32, outcome: Outcome) -> Result<Self> {
        if k == 0 || l == 0 || !self.can_fuse(k, l) {
            return Err(Error::NullFusion {
                k,
                l,
                config: self.canonical_key(),
            });
        }
        let mut c = self.clone();
        c.remove_chain(k);
        c.remove_chain(l);
        match outcome {
            Outcome::Success => c.add_chain(k + l),
            Outcome::Failure => {
                c.add_chain(k - 1);
                c.add_chain(l - 1);
            }
        }
        Ok(c)
    }

    /// Text key `"1^2,3^1"`: `length^count` pairs in increasing length.
    /// The empty configuration maps to the empty string.
    pub fn canonical_key(&self) -> String {
        let mut s = String::new();
        for (i, &(l, n)) in self.counts.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push_str(&l.to_string());
            s.push('^');
            s.push_str(&n.to_string());
        }
        s
    }

    /// Inverse of [`Configuration::canonical_key`]. Only canonical input is
    /// accepted, so the key encoding stays injective.
    pub fn parse_key(key: &str) -> Result<Self> {
        if key.is_empty() {
            return Ok(Self::empty());
        }
        let bad = || Error::InvalidKey(key.to_string());
        let mut counts = Vec::new();
        for part in key.split(',') {
            let (l, n) = part.split_once('^').ok_or_else(bad)?;
            let l: u32 = l.parse().map_err(|_| bad())?;
            let n: u32 = n.parse().map_err(|_| bad())?;
            if l == 0 || n == 0 {
                return Err(bad());
            }
            if let Some(&(prev, _)) = counts.last() {
                if prev >= l {
                    return Err(bad());
                }
            }
            counts.push((l, n));
        }
        let c = Configuration { counts };
        if c.canonical_key() != key {
            return Err(bad());
        }
        Ok(c)
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            f.write_str("∅")
        } else {
            f.write_str(&self.canonical_key())
        }
    }
}

impl FromStr for Configuration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "∅" {
            return Ok(Self::empty());
        }
        Self::parse_key(s)
    }
}

/// Ordered list of chain lengths.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct IdentityConfiguration {
    chains: Vec<u32>,
}

impl IdentityConfiguration {
    /// Chains of length zero are dropped.
    pub fn new(chains: Vec<u32>) -> Self {
        Self {
            chains: chains.into_iter().filter(|&l| l > 0).collect(),
        }
    }

    pub fn epr_pairs(n: u32) -> Self {
        Self {
            chains: vec![1; n as usize],
        }
    }

    pub fn chains(&self) -> &[u32] {
        &self.chains
    }

    pub fn len(&self) -> usize {
        self.chains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chains.is_empty()
    }

    pub fn total_length(&self) -> u64 {
        self.chains.iter().map(|&l| u64::from(l)).sum()
    }

    pub fn to_configuration(&self) -> Configuration {
        Configuration::from_lengths(self.chains.iter().copied())
    }

    /// Fuses the chains at positions `i` and `j`.
    ///
    /// On success the merged chain takes the lower position and the other is
    /// removed; on failure both lose an edge and empty chains are pruned.
    pub fn apply_fusion(&self, i: usize, j: usize, outcome: Outcome) -> Result<Self> {
        let n = self.chains.len();
        if i == j || i >= n || j >= n {
            return Err(Error::InvalidIndex { i, j, chains: n });
        }
        let (lo, hi) = (i.min(j), i.max(j));
        let mut chains = self.chains.clone();
        match outcome {
            Outcome::Success => {
                chains[lo] += chains[hi];
                chains.remove(hi);
            }
            Outcome::Failure => {
                chains[lo] -= 1;
                chains[hi] -= 1;
                if chains[hi] == 0 {
                    chains.remove(hi);
                }
                if chains[lo] == 0 {
                    chains.remove(lo);
                }
            }
        }
        Ok(Self { chains })
    }
}

impl From<Vec<u32>> for IdentityConfiguration {
    fn from(chains: Vec<u32>) -> Self {
        Self::new(chains)
    }
}

/// Every configuration of total length at most `n`, including the empty one,
/// ordered by vertex count and then by canonical key.
///
/// Every fusion lowers the vertex count, so this order lists the
/// dependencies of each configuration before the configuration itself.
pub fn enumerate_configurations(n: u32) -> Vec<Configuration> {
    let mut all = Vec::new();
    for total in 0..=n {
        partitions_into(total, total, &mut Vec::new(), &mut all);
    }
    let mut keyed: Vec<(u64, String, Configuration)> = all
        .into_iter()
        .map(|c| (c.vertex_count(), c.canonical_key(), c))
        .collect();
    keyed.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
    keyed.into_iter().map(|(_, _, c)| c).collect()
}

/// Groups [`enumerate_configurations`] by vertex count.
pub fn configurations_by_level(n: u32) -> Vec<(u64, Vec<Configuration>)> {
    let mut levels: Vec<(u64, Vec<Configuration>)> = Vec::new();
    for c in enumerate_configurations(n) {
        let v = c.vertex_count();
        match levels.last_mut() {
            Some((lv, cs)) if *lv == v => cs.push(c),
            _ => levels.push((v, vec![c])),
        }
    }
    levels
}

// Partitions of `rest` into parts no larger than `max_part`, parts emitted in
// non-increasing order.
fn partitions_into(rest: u32, max_part: u32, parts: &mut Vec<u32>, out: &mut Vec<Configuration>) {
    if rest == 0 {
        out.push(Configuration::from_lengths(parts.iter().copied()));
        return;
    }
    for part in (1..=max_part.min(rest)).rev() {
        parts.push(part);
        partitions_into(rest - part, part, parts, out);
        parts.pop();
    }
}
