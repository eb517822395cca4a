//! Stochastic simulation of strategies.
//!
//! Every trial draws from its own ChaCha8 stream: the generator is seeded
//! from the run seed and `set_stream` selects the trial index. Aggregates are
//! integer sums, so results do not depend on how trials are scheduled across
//! threads.

use rand::distr::{Bernoulli, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Action, Configuration, Event, IdentityConfiguration, IndexAction, Outcome};
use crate::error::{Error, Result, Violation};
use crate::strategy::{StatefulStrategy, Strategy, TwoStage};

/// Two-sided 95% normal quantile used for Wilson intervals.
pub const WILSON_Z: f64 = 1.959_963_984_540_054;

/// Source of fusion outcomes for one trial.
pub struct Coin {
    rng: ChaCha8Rng,
    dist: Bernoulli,
}

impl Coin {
    /// The generator for trial `trial` of a run seeded with `seed`.
    pub fn for_trial(p: f64, seed: u64, trial: u64) -> Result<Self> {
        let dist = Bernoulli::new(p).map_err(|_| Error::InvalidProbability(p.to_string()))?;
        if p <= 0.0 {
            return Err(Error::InvalidProbability(p.to_string()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        Ok(Self { rng, dist })
    }

    pub fn flip(&mut self) -> Outcome {
        if self.dist.sample(&mut self.rng) {
            Outcome::Success
        } else {
            Outcome::Failure
        }
    }
}

/// Summary of one sampled trajectory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSummary {
    pub final_config: Configuration,
    pub attempts: u64,
}

impl RunSummary {
    pub fn final_length(&self) -> u64 {
        self.final_config.total_length()
    }
}

fn check_edges(before: u64, after: u64, outcome: Outcome) {
    let lost = match outcome {
        Outcome::Success => 0,
        Outcome::Failure => 2,
    };
    assert_eq!(before - after, lost, "edge conservation violated");
}

/// Samples one trajectory of a stateful strategy.
pub fn simulate_trial<S: StatefulStrategy>(
    s: &S,
    initial: &IdentityConfiguration,
    coin: &mut Coin,
) -> Result<RunSummary> {
    let mut state = initial.clone();
    let mut memory = s.initial_memory(initial);
    let mut event = Event::default();
    let horizon = initial.to_configuration().vertex_count() as usize;
    loop {
        let violation = |event: &Event, v| Error::StrategyViolation {
            strategy: s.name(),
            event: event.to_string(),
            violation: v,
        };
        if event.len() > horizon {
            return Err(violation(&event, Violation::NonTerminating));
        }
        let action = s.decide(&state, &memory);
        match action {
            IndexAction::Stop if state.len() <= 1 => {
                return Ok(RunSummary {
                    final_config: state.to_configuration(),
                    attempts: event.len() as u64,
                })
            }
            IndexAction::Stop => return Err(violation(&event, Violation::PrematureStop)),
            IndexAction::Fuse(i, j) => {
                let n = state.len();
                if i == j || i >= n || j >= n {
                    let len = |x: usize| state.chains().get(x).copied().unwrap_or(0);
                    return Err(violation(&event, Violation::NullFusion { k: len(i), l: len(j) }));
                }
                let o = coin.flip();
                let next = state.apply_fusion(i, j, o)?;
                check_edges(state.total_length(), next.total_length(), o);
                memory = s.update(&memory, &state, action, o, &next);
                state = next;
                event.push(o);
            }
        }
    }
}

/// One trajectory from `c0` with the trial-0 stream of `seed`; returns the
/// final configuration.
pub fn simulate_run<S: StatefulStrategy>(
    s: &S,
    c0: &IdentityConfiguration,
    p: f64,
    seed: u64,
) -> Result<Configuration> {
    let mut coin = Coin::for_trial(p, seed, 0)?;
    simulate_trial(s, c0, &mut coin).map(|r| r.final_config)
}

// Runs a stateless strategy to completion on an anonymous configuration.
fn run_anonymous<S: Strategy>(s: &S, c0: Configuration, coin: &mut Coin) -> Result<(Configuration, u64)> {
    let mut c = c0;
    let mut event = Event::default();
    loop {
        let violation = |event: &Event, v| Error::StrategyViolation {
            strategy: s.name(),
            event: event.to_string(),
            violation: v,
        };
        match s.decide(&c) {
            Action::Stop if c.is_terminal() => return Ok((c, event.len() as u64)),
            Action::Stop => return Err(violation(&event, Violation::PrematureStop)),
            Action::Fuse(k, l) => {
                if !c.can_fuse(k, l) {
                    return Err(violation(&event, Violation::NullFusion { k, l }));
                }
                let o = coin.flip();
                let next = c.apply_fusion(k, l, o)?;
                check_edges(c.total_length(), next.total_length(), o);
                c = next;
                event.push(o);
            }
        }
    }
}

/// Samples a [`TwoStage`] run without tracking chain identities.
///
/// Consumes the coin in exactly the same order as [`simulate_trial`] on the
/// same strategy, so both produce the same trajectory for a given stream.
pub fn simulate_two_stage<S: Strategy>(
    ts: &TwoStage<S>,
    initial: &IdentityConfiguration,
    coin: &mut Coin,
) -> Result<RunSummary> {
    let mut attempts = 0u64;
    let mut survivors = Vec::new();
    for block in initial.chains().chunks(ts.block() as usize) {
        let (c, a) = run_anonymous(ts.inner(), Configuration::from_lengths(block.iter().copied()), coin)?;
        attempts += a;
        survivors.extend(c.lengths());
    }
    while survivors.len() > 1 {
        let mut next = Vec::with_capacity(survivors.len() / 2 + 1);
        for pair in survivors.chunks(2) {
            let [mut a, mut b] = match *pair {
                [a, b] => [a, b],
                [a] => {
                    next.push(a);
                    continue;
                }
                _ => unreachable!(),
            };
            loop {
                attempts += 1;
                match coin.flip() {
                    Outcome::Success => {
                        next.push(a + b);
                        break;
                    }
                    Outcome::Failure => {
                        a -= 1;
                        b -= 1;
                        if a == 0 || b == 0 {
                            next.extend([a, b].into_iter().filter(|&x| x > 0));
                            break;
                        }
                    }
                }
            }
        }
        survivors = next;
    }
    Ok(RunSummary {
        final_config: Configuration::from_lengths(survivors),
        attempts,
    })
}

/// Blocked two-stage strategy: `inner` inside blocks of `b` chains, then
/// insistent pairwise fusion of the survivors.
pub fn two_stage_strategy<S: Strategy>(b: u32, inner: S) -> Result<TwoStage<S>> {
    TwoStage::new(b, inner)
}

/// Aggregated outcome of many independent trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub strategy: String,
    pub initial: String,
    pub ps: f64,
    pub trials: u64,
    pub seed: u64,
    pub mean_length: f64,
    /// Sample standard deviation over `√trials`; absent for a single trial.
    pub std_error: Option<f64>,
    pub mean_attempts: f64,
    pub threshold: Option<u64>,
    /// Trials whose final length reached `threshold`.
    pub success_count: Option<u64>,
}

#[derive(Default, Clone, Copy)]
struct Sums {
    length: u64,
    length_sq: u128,
    attempts: u64,
    hits: u64,
}

impl Sums {
    fn add(self, o: Self) -> Self {
        Sums {
            length: self.length + o.length,
            length_sq: self.length_sq + o.length_sq,
            attempts: self.attempts + o.attempts,
            hits: self.hits + o.hits,
        }
    }
}

fn aggregate<F>(trials: u64, p: f64, seed: u64, threshold: Option<u64>, run: F) -> Result<Sums>
where
    F: Fn(&mut Coin) -> Result<RunSummary> + Sync,
{
    if trials == 0 {
        return Err(Error::Domain("at least one trial is required".into()));
    }
    Coin::for_trial(p, seed, 0)?;
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut coin = Coin::for_trial(p, seed, t)?;
            let r = run(&mut coin)?;
            let len = r.final_length();
            Ok(Sums {
                length: len,
                length_sq: u128::from(len) * u128::from(len),
                attempts: r.attempts,
                hits: u64::from(threshold.is_some_and(|th| len >= th)),
            })
        })
        .try_reduce(Sums::default, |a, b| Ok(a.add(b)))
}

fn report(
    strategy: String,
    initial: &IdentityConfiguration,
    p: f64,
    trials: u64,
    seed: u64,
    threshold: Option<u64>,
    s: Sums,
) -> SimulationReport {
    let n = u128::from(trials);
    let std_error = (trials > 1).then(|| {
        let centered = n * s.length_sq - u128::from(s.length) * u128::from(s.length);
        let variance = centered as f64 / (n * (n - 1)) as f64;
        (variance / trials as f64).sqrt()
    });
    SimulationReport {
        strategy,
        initial: initial.to_configuration().canonical_key(),
        ps: p,
        trials,
        seed,
        mean_length: s.length as f64 / trials as f64,
        std_error,
        mean_attempts: s.attempts as f64 / trials as f64,
        threshold,
        success_count: threshold.map(|_| s.hits),
    }
}

/// Mean and standard error of the final total length of `s` from `c0`.
pub fn estimate_quality<S: StatefulStrategy>(
    s: &S,
    c0: &IdentityConfiguration,
    p: f64,
    trials: u64,
    seed: u64,
) -> Result<SimulationReport> {
    estimate_quality_with_threshold(s, c0, p, trials, seed, None)
}

/// As [`estimate_quality`], also counting trials whose final length reaches
/// `threshold`.
pub fn estimate_quality_with_threshold<S: StatefulStrategy>(
    s: &S,
    c0: &IdentityConfiguration,
    p: f64,
    trials: u64,
    seed: u64,
    threshold: Option<u64>,
) -> Result<SimulationReport> {
    let sums = aggregate(trials, p, seed, threshold, |coin| simulate_trial(s, c0, coin))?;
    Ok(report(s.name(), c0, p, trials, seed, threshold, sums))
}

/// [`estimate_quality_with_threshold`] for a [`TwoStage`] strategy through
/// the fast path; the report is identical to the generic one.
pub fn estimate_two_stage_quality<S: Strategy>(
    ts: &TwoStage<S>,
    c0: &IdentityConfiguration,
    p: f64,
    trials: u64,
    seed: u64,
    threshold: Option<u64>,
) -> Result<SimulationReport> {
    let sums = aggregate(trials, p, seed, threshold, |coin| simulate_two_stage(ts, c0, coin))?;
    Ok(report(StatefulStrategy::name(ts), c0, p, trials, seed, threshold, sums))
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (phat + z2 / (2.0 * n)) / denom;
    let half = z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let low = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let high = if successes == trials {
        1.0
    } else {
        (centre + half).min(1.0)
    };
    (low, high)
}

/// How often the two-stage strategy builds a chain of length at least `L`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub target_length: u64,
    pub pairs: u32,
    pub block: u32,
    pub blocks: u32,
    pub trials: u64,
    pub successes: u64,
    pub fraction: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    /// Whether `L ≥ b/ε`, the regime in which the short final block is
    /// absorbed by the `ε` slack. Absent when the pair count was given directly.
    pub remainder_covered: Option<bool>,
}

/// Runs the two-stage strategy on `N = ⌈(1/α + ε)L⌉` EPR pairs. When `b`
/// does not divide `N` the last block is shorter.
#[allow(clippy::too_many_arguments)]
pub fn threshold_experiment<S: Strategy>(
    l: u64,
    alpha: f64,
    epsilon: f64,
    b: u32,
    inner: S,
    p: f64,
    trials: u64,
    seed: u64,
) -> Result<ThresholdReport> {
    let (sufficient, _) = crate::bounds::inverse_resource_bounds(l as f64, alpha, epsilon)?;
    let n = sufficient.ceil() as u32;
    let mut r = threshold_experiment_with_pairs(l, n, b, inner, p, trials, seed)?;
    r.remainder_covered = Some(l as f64 >= f64::from(b) / epsilon);
    Ok(r)
}

/// Runs the two-stage strategy on exactly `n` EPR pairs.
pub fn threshold_experiment_with_pairs<S: Strategy>(
    l: u64,
    n: u32,
    b: u32,
    inner: S,
    p: f64,
    trials: u64,
    seed: u64,
) -> Result<ThresholdReport> {
    let ts = two_stage_strategy(b, inner)?;
    let r = estimate_two_stage_quality(&ts, &IdentityConfiguration::epr_pairs(n), p, trials, seed, Some(l))?;
    let successes = r.success_count.unwrap_or(0);
    let (wilson_low, wilson_high) = wilson_interval(successes, trials, WILSON_Z);
    Ok(ThresholdReport {
        target_length: l,
        pairs: n,
        block: b,
        blocks: n.div_ceil(b),
        trials,
        successes,
        fraction: successes as f64 / trials as f64,
        wilson_low,
        wilson_high,
        remainder_covered: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategy::{static_strategy, Anonymous, Greed, Modesty};

    #[test]
    fn single_chain_is_untouched() {
        let c = IdentityConfiguration::new(vec![7]);
        for seed in 0..5 {
            assert_eq!(
                simulate_run(&Anonymous(Greed), &c, 0.5, seed).unwrap(),
                Configuration::single(7)
            );
        }
    }

    #[test]
    fn certain_success() {
        let c = IdentityConfiguration::epr_pairs(2);
        assert_eq!(
            simulate_run(&Anonymous(Modesty), &c, 1.0, 3).unwrap(),
            Configuration::single(2)
        );
    }

    #[test]
    fn single_trial_has_no_std_error() {
        let r = estimate_quality(&Anonymous(Modesty), &IdentityConfiguration::epr_pairs(4), 0.5, 1, 9).unwrap();
        assert_eq!(r.std_error, None);
        assert!(estimate_quality(&Anonymous(Modesty), &IdentityConfiguration::epr_pairs(4), 0.5, 0, 9).is_err());
    }

    #[test]
    fn fast_two_stage_matches_generic_path() {
        let ts = static_strategy();
        let c = IdentityConfiguration::epr_pairs(37);
        for t in 0..200 {
            let mut a = Coin::for_trial(0.5, 11, t).unwrap();
            let mut b = Coin::for_trial(0.5, 11, t).unwrap();
            assert_eq!(
                simulate_trial(&ts, &c, &mut a).unwrap(),
                simulate_two_stage(&ts, &c, &mut b).unwrap()
            );
        }
    }

    #[test]
    fn wilson_interval_brackets_estimate() {
        let (lo, hi) = wilson_interval(95, 100, WILSON_Z);
        assert!(lo < 0.95 && 0.95 < hi && hi < 1.0);
        let (lo, hi) = wilson_interval(100, 100, WILSON_Z);
        assert!(lo > 0.96 && hi == 1.0);
    }
}
