//! Building an `n × n` cluster by weaving `n` linear chains onto a thread.
//!
//! Each cross-chain has a budget of `m = round(a·n)` fusion attempts and
//! needs `n` successes; every failure costs two edges of the chain involved.

use serde::Serialize;
use statrs::function::factorial::ln_binomial;

use crate::config::Outcome;
use crate::error::{Error, Result};
use crate::montecarlo::{wilson_interval, Coin, WILSON_Z};

/// Cluster side `n`, overhead factor `a` and per-attempt success probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeaveParameters {
    pub n: u32,
    pub a: f64,
    pub p: f64,
}

impl WeaveParameters {
    pub fn new(n: u32, a: f64, p: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("cluster side n must be at least 1".into()));
        }
        if a.is_nan() || a <= 1.0 {
            return Err(Error::Domain(format!("overhead factor a must exceed 1, got {a}")));
        }
        if p.is_nan() || p <= 0.0 || p > 1.0 {
            return Err(Error::InvalidProbability(p.to_string()));
        }
        Ok(Self { n, a, p })
    }

    /// Attempt budget per chain, `a·n` rounded to the nearest integer.
    pub fn budget(&self) -> u64 {
        ((self.a * f64::from(self.n)).round() as u64).max(u64::from(self.n))
    }
}

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let terms: Vec<f64> = terms.collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

// `(ln P[Binomial(m, p) < n], ln P[Binomial(m, p) ≥ n])`.
fn log_tails(params: &WeaveParameters) -> (f64, f64) {
    if params.p == 1.0 {
        return (f64::NEG_INFINITY, 0.0);
    }
    let m = params.budget();
    let n = u64::from(params.n);
    let (ln_p, ln_q) = (params.p.ln(), (1.0 - params.p).ln());
    let term = |j| ln_binomial(m, j) + j as f64 * ln_p + (m - j) as f64 * ln_q;
    (log_sum_exp((0..n).map(term)), log_sum_exp((n..=m).map(term)))
}

/// `ln P[Binomial(m, p) < n]`, the log-probability that a chain runs out of
/// attempts.
pub fn log_chain_failure_probability(params: &WeaveParameters) -> f64 {
    log_tails(params).0
}

/// `ln π_s(n)`, taking whichever tail is smaller to keep precision.
pub fn log_single_chain_weave_probability(params: &WeaveParameters) -> f64 {
    let (lower, upper) = log_tails(params);
    if lower < upper {
        (-lower.exp()).ln_1p()
    } else {
        upper
    }
}

/// `π_s(n) = P[Binomial(m, p) ≥ n]`: the probability that one cross-chain
/// gathers its `n` successes within the budget.
pub fn single_chain_weave_probability(params: &WeaveParameters) -> f64 {
    let (lower, upper) = log_tails(params);
    if lower < upper {
        -lower.exp_m1()
    } else {
        upper.exp()
    }
}

/// The same probability as a negative-binomial sum: the `n`-th success
/// arrives after `k ≤ m − n` failures.
pub fn single_chain_weave_probability_negative_binomial(params: &WeaveParameters) -> f64 {
    if params.p == 1.0 {
        return 1.0;
    }
    let n = u64::from(params.n);
    let m = params.budget();
    let (ln_p, ln_q) = (params.p.ln(), (1.0 - params.p).ln());
    log_sum_exp((0..=m - n).map(|k| n as f64 * ln_p + k as f64 * ln_q + ln_binomial(n + k - 1, k))).exp()
}

/// `ln P_s(n) = n · ln π_s(n)`.
pub fn log_overall_success_probability(params: &WeaveParameters) -> f64 {
    f64::from(params.n) * log_single_chain_weave_probability(params)
}

/// `P_s(n) = π_s(n)^n`: all `n` cross-chains succeed.
pub fn overall_success_probability(params: &WeaveParameters) -> f64 {
    log_overall_success_probability(params).exp()
}

/// `ln(1 − P_s(n))`, accurate when the failure probability is tiny.
pub fn log_overall_failure_probability(params: &WeaveParameters) -> f64 {
    let x = log_overall_success_probability(params);
    if x.abs() < 1e-10 {
        f64::from(params.n).ln() + log_chain_failure_probability(params)
    } else {
        (-x.exp_m1()).ln()
    }
}

/// Hoeffding lower bound `1 − exp(−2(m·p − n + 1)²/m)` on `π_s(n)`, valid
/// when `a > 1/p`.
pub fn hoeffding_bound(params: &WeaveParameters) -> Result<f64> {
    if params.a * params.p <= 1.0 {
        return Err(Error::Domain(format!(
            "Hoeffding bound needs a > 1/p, got a = {}, p = {}",
            params.a, params.p
        )));
    }
    let m = params.budget() as f64;
    let d = m * params.p - f64::from(params.n) + 1.0;
    Ok(-(-2.0 * d * d / m).exp_m1())
}

/// Direction in which `P_s(n)` moves along the scanned `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    Increasing,
    Decreasing,
    Mixed,
    /// Fewer than two values of `n`.
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanPoint {
    pub n: u32,
    pub success: f64,
    pub log_success: f64,
    pub log_failure: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub a: f64,
    pub p: f64,
    /// `p` equals the threshold `1/a`; no trend is claimed there.
    pub critical: bool,
    pub trend: Trend,
    pub points: Vec<ScanPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PercolationScan {
    pub threshold: f64,
    pub rows: Vec<ScanRow>,
    /// Largest `p` with decreasing `P_s` and smallest `p` with increasing `P_s`.
    pub bracket: Option<(f64, f64)>,
    pub bracket_contains_threshold: Option<bool>,
}

fn classify(points: &[ScanPoint]) -> Trend {
    if points.len() < 2 {
        return Trend::Undetermined;
    }
    let pairs = || points.windows(2);
    if pairs().all(|w| w[1].log_failure < w[0].log_failure) {
        Trend::Increasing
    } else if pairs().all(|w| w[1].log_success < w[0].log_success) {
        Trend::Decreasing
    } else {
        Trend::Mixed
    }
}

/// Evaluates `P_s(n)` over a grid of success probabilities at fixed `a` and
/// locates the crossover between shrinking and growing success.
pub fn percolation_scan(a: f64, ps: &[f64], ns: &[u32]) -> Result<PercolationScan> {
    if ps.is_empty() || ns.is_empty() {
        return Err(Error::Domain("percolation scan needs non-empty grids".into()));
    }
    let mut ns = ns.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let threshold = 1.0 / a;
    let mut rows = Vec::with_capacity(ps.len());
    for &p in ps {
        let points = ns
            .iter()
            .map(|&n| {
                let w = WeaveParameters::new(n, a, p)?;
                Ok(ScanPoint {
                    n,
                    success: overall_success_probability(&w),
                    log_success: log_overall_success_probability(&w),
                    log_failure: log_overall_failure_probability(&w),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(ScanRow {
            a,
            p,
            critical: (p - threshold).abs() < 1e-12,
            trend: classify(&points),
            points,
        });
    }
    let decided = || rows.iter().filter(|r| !r.critical);
    let lo = decided()
        .filter(|r| r.trend == Trend::Decreasing)
        .map(|r| r.p)
        .fold(None, |acc: Option<f64>, p| Some(acc.map_or(p, |a| a.max(p))));
    let hi = decided()
        .filter(|r| r.trend == Trend::Increasing)
        .map(|r| r.p)
        .fold(None, |acc: Option<f64>, p| Some(acc.map_or(p, |a| a.min(p))));
    let bracket = lo.zip(hi);
    Ok(PercolationScan {
        threshold,
        bracket,
        bracket_contains_threshold: bracket.map(|(l, h)| l <= threshold && threshold <= h),
        rows,
    })
}

/// Empirical fraction of successful weaves.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeaveReport {
    pub params: WeaveParameters,
    pub trials: u64,
    pub seed: u64,
    pub successes: u64,
    pub fraction: f64,
    pub std_error: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
}

fn weave_trial(params: &WeaveParameters, coin: &mut Coin) -> bool {
    let m = params.budget();
    for _ in 0..params.n {
        let mut successes = 0u32;
        let mut used = 0u64;
        while successes < params.n && used < m {
            used += 1;
            if coin.flip() == Outcome::Success {
                successes += 1;
            }
        }
        if successes < params.n {
            return false;
        }
    }
    true
}

/// Simulates the attempt-counting model: each cross-chain draws attempts
/// until it has `n` successes or exhausts its budget. A trial stops at the
/// first chain that fails.
pub fn simulate_weave(params: &WeaveParameters, trials: u64, seed: u64) -> Result<WeaveReport> {
    use rayon::prelude::*;
    if trials == 0 {
        return Err(Error::Domain("at least one trial is required".into()));
    }
    Coin::for_trial(params.p, seed, 0)?;
    let successes = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut coin = Coin::for_trial(params.p, seed, t)?;
            Ok::<u64, Error>(u64::from(weave_trial(params, &mut coin)))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let fraction = successes as f64 / trials as f64;
    let (wilson_low, wilson_high) = wilson_interval(successes, trials, WILSON_Z);
    Ok(WeaveReport {
        params: *params,
        trials,
        seed,
        successes,
        fraction,
        std_error: (fraction * (1.0 - fraction) / trials as f64).sqrt(),
        wilson_low,
        wilson_high,
    })
}

/// Input edges, in double-edge units, needed for an `n × n` weave.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ResourceBreakdown {
    /// `n` cross-chains of length `m`.
    pub cross_chains: u64,
    /// The thread of length `n(l + 1)` with `l = m − n`.
    pub thread: u64,
    pub total: u64,
    /// The further `2n²` edges for preparing redundantly encoded qubits,
    /// reported separately and not included in `total`.
    pub redundancy: u64,
}

pub fn resource_breakdown(params: &WeaveParameters) -> ResourceBreakdown {
    let n = u64::from(params.n);
    let m = params.budget();
    let cross_chains = n * m;
    let thread = n * (m - n + 1);
    ResourceBreakdown {
        cross_chains,
        thread,
        total: cross_chains + thread,
        redundancy: 2 * n * n,
    }
}

/// `n·m + n·(m − n + 1)`.
pub fn resource_count(params: &WeaveParameters) -> u64 {
    resource_breakdown(params).total
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let k = points.len() as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
