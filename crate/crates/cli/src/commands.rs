//! Subcommand implementations.

use cluster_forge_core::bounds::{
    analytic_upper_bound, modesty_lower_bound, modesty_qualities, razor_evaluation, razor_upper_bound,
    LinearProgramInstance,
};
use cluster_forge_core::exact::{evaluate_stateful, evaluate_strategy, optimal_quality, StrategyEvaluator};
use cluster_forge_core::lemmas::check_lemmas;
use cluster_forge_core::montecarlo::{
    estimate_quality_with_threshold, estimate_two_stage_quality, two_stage_strategy, SimulationReport,
};
use cluster_forge_core::strategy::{validate_stateful, validate_strategy};
use cluster_forge_core::twodim::{
    hoeffding_bound, overall_success_probability, percolation_scan as scan, simulate_weave,
    single_chain_weave_probability, WeaveParameters,
};
use cluster_forge_core::value::{exact, exact_int, half};
use cluster_forge_core::{
    static_strategy, Anonymous, Configuration, ExactValue, Greed, IdentityConfiguration, Modesty, Probability, Strategy,
};
use serde_json::json;

use crate::output::Sink;
use crate::tables::Engine;
use crate::{
    BoundsArgs, Failure, Format, Inner, McArgs, McStrategy, OptimalTableArgs, QualityArgs, RazorArgs, ScanArgs,
    StrategyName, ValidateArgs, WeaveArgs,
};

// Runs `$body` with `$v` bound to the exact or floating-point success probability.
macro_rules! with_engine {
    ($p:expr, |$v:ident| $body:expr) => {
        match $p {
            Probability::Exact(x) => {
                let $v: ExactValue = x.clone();
                $body
            }
            Probability::Float(x) => {
                let $v: f64 = *x;
                $body
            }
        }
    };
}

fn epr(n: u32) -> Configuration {
    Configuration::epr_pairs(n)
}

fn range(single: Option<u32>, max: Option<u32>, start: u32) -> Vec<u32> {
    match (single, max) {
        (Some(n), _) => vec![n],
        (None, Some(m)) => (start..=m).collect(),
        (None, None) => Vec::new(),
    }
}

pub fn quality(args: &QualityArgs, sink: Sink) -> Result<(), Failure> {
    if args.n_min > args.n_max {
        return Err(Failure::usage("--n-min must not exceed --n-max"));
    }
    with_engine!(&args.ps, |p| quality_rows(args, &p, sink))
}

fn quality_rows<T: Engine>(args: &QualityArgs, p: &T, sink: Sink) -> Result<(), Failure> {
    let strategies = match args.strategy {
        StrategyName::All => vec![
            StrategyName::Optimal,
            StrategyName::Modesty,
            StrategyName::Static,
            StrategyName::Greed,
        ],
        s => vec![s],
    };
    let ns = args.n_min..=args.n_max;
    let mut out = sink.csv(
        "quality",
        &["N", "strategy", "ps", "quality", "attempts", "quality_decimal"],
    )?;
    let ps = p.to_string();
    let mut emit = |n: u32, name: &str, q: &T, t: &T| {
        out.row([
            n.to_string(),
            name.to_string(),
            ps.clone(),
            q.to_string(),
            t.to_string(),
            q.to_f64().to_string(),
        ])
    };
    for s in strategies {
        match s {
            StrategyName::Optimal => {
                let table = T::optimal_table(args.n_max, p, args.budget)?;
                for n in ns.clone() {
                    let e = table.get(&epr(n)).expect("table covers N");
                    emit(n, "optimal", &e.quality, &e.attempts)?;
                }
            }
            StrategyName::Greed | StrategyName::Modesty => {
                let strategy: &dyn Strategy = if s == StrategyName::Greed { &Greed } else { &Modesty };
                let mut ev = StrategyEvaluator::new(strategy, p.clone());
                for n in ns.clone() {
                    let e = ev.evaluate(&epr(n))?;
                    emit(n, &strategy.name(), &e.quality, &e.attempts)?;
                }
            }
            StrategyName::Static => {
                for n in ns.clone() {
                    let e = evaluate_stateful(&static_strategy(), &IdentityConfiguration::epr_pairs(n), p)?;
                    emit(n, "static", &e.quality, &e.attempts)?;
                }
            }
            StrategyName::All => unreachable!("expanded above"),
        }
    }
    out.finish()
}

pub fn optimal_table(args: &OptimalTableArgs, mut sink: Sink) -> Result<(), Failure> {
    let Probability::Exact(p) = &args.ps else {
        return Err(Failure::usage(
            "table files hold exact values; give --ps as a rational a/b",
        ));
    };
    let table = ExactValue::optimal_table(args.n, p, args.budget)?;
    table.write_to(p, sink.writer())?;
    sink.writer().flush()?;
    eprintln!("optimal table N={} ps={p}: {} configurations", args.n, table.len());
    Ok(())
}

pub fn bounds(args: &BoundsArgs, sink: Sink) -> Result<(), Failure> {
    if args.r < 2 {
        return Err(Failure::usage("--r must be at least 2"));
    }
    if args.n == Some(0) || args.n_max == Some(0) || args.n0 == 0 {
        return Err(Failure::usage("N and N0 must be positive"));
    }
    let ns = range(args.n, args.n_max, 1);
    let hi = *ns.iter().max().expect("non-empty range");
    let p = half();
    let optimal = ExactValue::optimal_table(hi, &p, args.budget)?;
    let modesty = modesty_qualities(hi.max(2 * args.n0), &p)?;
    let mut out = sink.csv(
        "bounds",
        &[
            "N",
            "lower",
            "modesty",
            "optimal",
            "razor_upper",
            "lp_upper",
            "analytic_upper",
        ],
    )?;
    for n in ns {
        let lower = if n >= args.n0 {
            modesty_lower_bound(n, args.n0, &modesty)?.to_string()
        } else {
            String::new()
        };
        let lp = LinearProgramInstance::new(n)?.solve()?;
        let lp_upper = exact_int(i64::from(n)) - lp.objective;
        out.row([
            n.to_string(),
            lower,
            modesty[n as usize].to_string(),
            optimal.quality(&epr(n)).expect("table covers N").to_string(),
            razor_upper_bound(n, args.r)?.to_string(),
            lp_upper.to_string(),
            analytic_upper_bound(n).map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    out.finish()
}

pub fn razor(args: &RazorArgs, sink: Sink) -> Result<(), Failure> {
    if args.r_min < 2 || args.r_min > args.r_max {
        return Err(Failure::usage("need 2 <= --r-min <= --r-max"));
    }
    if args.n == Some(0) {
        return Err(Failure::usage("N must be positive"));
    }
    with_engine!(&args.ps, |p| razor_rows(args, &p, sink))
}

fn razor_rows<T: Engine>(args: &RazorArgs, p: &T, sink: Sink) -> Result<(), Failure> {
    let ns = range(args.n, args.n_max, 2);
    let mut header = vec!["N", "R", "ps", "quality", "attempts", "upper"];
    let optimal = if args.with_optimal {
        header.push("optimal");
        let hi = ns.iter().copied().max().unwrap_or(0);
        Some(T::optimal_table(hi, p, None)?)
    } else {
        None
    };
    let loss = T::from_u64(2) * (T::one() - p.clone());
    let mut out = sink.csv("razor", &header)?;
    for &n in &ns {
        for r in args.r_min..=args.r_max {
            let e = razor_evaluation(&epr(n), r, p)?;
            let upper = T::from_u64(u64::from(n)) - loss.clone() * e.attempts.clone();
            let mut row = vec![
                n.to_string(),
                r.to_string(),
                p.to_string(),
                e.quality.to_string(),
                e.attempts.to_string(),
                upper.to_string(),
            ];
            if let Some(t) = &optimal {
                row.push(t.quality(&epr(n)).expect("table covers N").to_string());
            }
            out.row(row)?;
        }
    }
    out.finish()
}

pub fn mc(args: &McArgs, sink: Sink) -> Result<(), Failure> {
    let id = IdentityConfiguration::epr_pairs(args.n);
    let p = args.ps.as_f64();
    let (trials, seed, threshold) = (args.trials, args.seed, args.threshold);
    let report: SimulationReport = match args.strategy {
        McStrategy::Greed => estimate_quality_with_threshold(&Anonymous(Greed), &id, p, trials, seed, threshold)?,
        McStrategy::Modesty => estimate_quality_with_threshold(&Anonymous(Modesty), &id, p, trials, seed, threshold)?,
        McStrategy::Static => estimate_two_stage_quality(&static_strategy(), &id, p, trials, seed, threshold)?,
        McStrategy::TwoStage => match args.inner {
            Inner::Greed => {
                let ts = two_stage_strategy(args.block, Greed)?;
                estimate_two_stage_quality(&ts, &id, p, trials, seed, threshold)?
            }
            Inner::Modesty => {
                let ts = two_stage_strategy(args.block, Modesty)?;
                estimate_two_stage_quality(&ts, &id, p, trials, seed, threshold)?
            }
        },
        McStrategy::Optimal => {
            let lookup = with_engine!(&args.ps, |v| Engine::optimal_table(args.n, &v, None)?
                .to_lookup_strategy());
            estimate_quality_with_threshold(&Anonymous(&lookup), &id, p, trials, seed, threshold)?
        }
    };
    sink.json("simulation-report", serde_json::to_value(&report)?)
}

pub fn weave(args: &WeaveArgs, sink: Sink) -> Result<(), Failure> {
    let p = args.ps.as_f64();
    let mut out = sink.csv(
        "weave",
        &[
            "n",
            "pi_s",
            "P_s",
            "hoeffding",
            "mc_estimate",
            "mc_ci_low",
            "mc_ci_high",
        ],
    )?;
    for &n in &args.n {
        let w = WeaveParameters::new(n, args.a, p)?;
        let (estimate, low, high) = if args.trials > 0 {
            let r = simulate_weave(&w, args.trials, args.seed)?;
            (
                r.fraction.to_string(),
                r.wilson_low.to_string(),
                r.wilson_high.to_string(),
            )
        } else {
            Default::default()
        };
        out.row([
            n.to_string(),
            single_chain_weave_probability(&w).to_string(),
            overall_success_probability(&w).to_string(),
            hoeffding_bound(&w).map(|h| h.to_string()).unwrap_or_default(),
            estimate,
            low,
            high,
        ])?;
    }
    out.finish()
}

pub fn percolation_scan(args: &ScanArgs, sink: Sink) -> Result<(), Failure> {
    let ps: Vec<f64> = if args.ps.is_empty() {
        (1..20).map(|k| f64::from(k) / 20.0).collect()
    } else {
        args.ps.clone()
    };
    let result = scan(args.a, &ps, &args.n)?;
    if args.format == Format::Json {
        return sink.json("percolation-scan", serde_json::to_value(&result)?);
    }
    let mut out = sink.csv(
        "percolation-scan",
        &["a", "ps", "n", "P_s", "ln_P_s", "ln_failure", "trend", "critical"],
    )?;
    for row in &result.rows {
        for point in &row.points {
            out.row([
                row.a.to_string(),
                row.p.to_string(),
                point.n.to_string(),
                point.success.to_string(),
                point.log_success.to_string(),
                point.log_failure.to_string(),
                format!("{:?}", row.trend).to_lowercase(),
                row.critical.to_string(),
            ])?;
        }
    }
    out.finish()?;
    match result.bracket {
        Some((lo, hi)) => eprintln!(
            "threshold 1/a = {}; crossover between ps = {lo} and {hi}; contains threshold: {}",
            result.threshold,
            result.bracket_contains_threshold.unwrap_or(false)
        ),
        None => eprintln!("threshold 1/a = {}; no crossover on this grid", result.threshold),
    }
    Ok(())
}

struct Check {
    name: &'static str,
    asserted: bool,
    checked: u64,
    failures: Vec<String>,
}

impl Check {
    fn new(name: &'static str, asserted: bool) -> Self {
        Check {
            name,
            asserted,
            checked: 0,
            failures: Vec::new(),
        }
    }

    fn record(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failures.push(describe());
        }
    }

    fn result<T>(&mut self, r: Result<T, cluster_forge_core::Error>, context: impl FnOnce() -> String) -> Option<T> {
        self.checked += 1;
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.failures.push(format!("{}: {e}", context()));
                None
            }
        }
    }

    fn to_json(&self) -> serde_json::Value {
        json!({
            "name": self.name,
            "asserted": self.asserted,
            "checked": self.checked,
            "passed": self.failures.is_empty(),
            "failures": self.failures.iter().take(10).collect::<Vec<_>>(),
            "failure_count": self.failures.len(),
        })
    }
}

fn at_most<T: Engine>(a: &T, b: &T) -> bool {
    a <= b || a.agrees(b)
}

pub fn validate(args: &ValidateArgs, sink: Sink) -> Result<(), Failure> {
    let mut checks = with_engine!(&args.ps, |p| validate_engine(args, &p)?);
    checks.extend(validate_half(args)?);
    let ok = checks.iter().filter(|c| c.asserted).all(|c| c.failures.is_empty());
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| c.asserted && !c.failures.is_empty())
        .map(|c| c.name)
        .collect();
    sink.json(
        "validation-report",
        json!({
            "ps": args.ps.to_string(),
            "n_max": args.n_max,
            "lemma_size": args.lemma_size,
            "lp_max": args.lp_max,
            "passed": ok,
            "checks": checks.iter().map(Check::to_json).collect::<Vec<_>>(),
        }),
    )?;
    if ok {
        Ok(())
    } else {
        Err(Failure::certificate(format!(
            "validation failed: {}",
            failed.join(", ")
        )))
    }
}

// Checks at the requested success probability.
fn validate_engine<T: Engine>(args: &ValidateArgs, p: &T) -> Result<Vec<Check>, Failure> {
    let table = T::optimal_table(args.n_max, p, None)?;
    let lookup = table.to_lookup_strategy();
    let mut valid = Check::new("strategies-valid", true);
    let mut engine = Check::new("optimal-engines-agree", true);
    let mut identity = Check::new("attempts-identity", true);
    let mut ordering = Check::new("strategies-below-optimal", true);
    let loss = T::from_u64(2) * (T::one() - p.clone());

    for (c, e) in table.iter() {
        let expected = T::from_u64(c.total_length()) - loss.clone() * e.attempts.clone();
        identity.record(expected.agrees(&e.quality), || {
            format!("{c}: Q={} T={}", e.quality, e.attempts)
        });
    }
    for n in 1..=args.n_max {
        let c = epr(n);
        let id = IdentityConfiguration::epr_pairs(n);
        valid.result(validate_strategy(&Greed, &c), || format!("greed N={n}"));
        valid.result(validate_strategy(&Modesty, &c), || format!("modesty N={n}"));
        valid.result(validate_strategy(&lookup, &c), || format!("optimal N={n}"));
        valid.result(validate_stateful(&static_strategy(), &id), || format!("static N={n}"));

        let q = table.quality(&c).expect("table covers N").clone();
        let direct = optimal_quality(&c, p);
        engine.record(direct.agrees(&q), || format!("N={n}: table {q} vs memoised {direct}"));
        if let Some(e) = engine.result(evaluate_strategy(&lookup, &c, p), || format!("lookup N={n}")) {
            engine.record(e.quality.agrees(&q), || {
                format!("N={n}: lookup {} vs table {q}", e.quality)
            });
        }
        let strategies = [
            ("greed", evaluate_strategy(&Greed, &c, p).map(|e| e.quality)),
            ("modesty", evaluate_strategy(&Modesty, &c, p).map(|e| e.quality)),
            (
                "static",
                evaluate_stateful(&static_strategy(), &id, p).map(|e| e.quality),
            ),
        ];
        for (name, r) in strategies {
            if let Some(v) = ordering.result(r, || format!("{name} N={n}")) {
                ordering.record(at_most(&v, &q), || format!("{name} N={n}: {v} > optimal {q}"));
            }
        }
        let length = T::from_u64(u64::from(n));
        ordering.record(at_most(&q, &length), || format!("N={n}: optimal {q} > N"));
    }

    let report = check_lemmas(args.lemma_size, p)?;
    let mut lemmas = Vec::new();
    for l in report.checks {
        // The monotonicity statements are established at p = 1/2 only.
        let asserted = l.name == "attempts" || args.ps == Probability::half();
        let mut check = Check::new(l.name, asserted);
        check.checked = l.checked;
        check.failures = l.violations;
        lemmas.push(check);
    }
    let mut checks = vec![valid, engine, identity, ordering];
    checks.extend(lemmas);
    Ok(checks)
}

// Bound checks, which are stated at p = 1/2.
fn validate_half(args: &ValidateArgs) -> Result<Vec<Check>, Failure> {
    let p = half();
    let table = ExactValue::optimal_table(args.n_max.max(12), &p, None)?;
    let q = |n: u32| table.quality(&epr(n)).expect("table covers N").clone();

    let mut lp = Check::new("lp-certificates", true);
    for n in 1..=args.lp_max {
        let Some(instance) = lp.result(LinearProgramInstance::new(n), || format!("N={n}")) else {
            continue;
        };
        if let Some(sol) = lp.result(instance.solve(), || format!("N={n}")) {
            let closed = instance.closed_form_objective();
            lp.record(sol.objective == closed, || {
                format!("N={n}: simplex {} vs closed form {closed}", sol.objective)
            });
        }
    }

    let mut sandwich = Check::new("bound-sandwich", true);
    let modesty = modesty_qualities(16, &p)?;
    for n in 2..=args.n_max {
        if let Some(u) = sandwich.result(razor_upper_bound(n, 2), || format!("razor N={n}")) {
            sandwich.record(q(n) <= u, || format!("N={n}: Q={} above razor bound {u}", q(n)));
        }
        if n >= 6 {
            let a = analytic_upper_bound(n)?;
            sandwich.record(q(n) <= a, || format!("N={n}: Q={} above N/5+2", q(n)));
        }
        if n >= 8 {
            if let Some(l) = sandwich.result(modesty_lower_bound(n, 8, &modesty), || format!("lower N={n}")) {
                sandwich.record(l <= q(n), || format!("N={n}: lower bound {l} above Q={}", q(n)));
            }
        }
    }

    let mut two_chain = Check::new("two-chain-formula", true);
    for l1 in 1..=6u32 {
        for l2 in 1..=6u32 {
            if l1 + l2 > table.n() {
                continue;
            }
            let got = table
                .quality(&Configuration::from_lengths([l1, l2]))
                .expect("table covers C")
                .clone();
            let expected = exact_int(i64::from(l1 + l2) - 2) + exact(2, 1 << l1.min(l2));
            two_chain.record(got == expected, || format!("({l1},{l2}): {got} vs {expected}"));
        }
    }
    Ok(vec![lp, sandwich, two_chain])
}
