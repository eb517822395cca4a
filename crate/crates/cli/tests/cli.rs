//! End-to-end runs of the `cluster-forge` binary.

use std::path::Path;
use std::process::{Command, Output};

use cluster_forge_core::value::parse_exact;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cluster-forge"))
        .args(args)
        .env_remove("CLUSTER_FORGE_TABLE_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

// Data rows as field vectors, after the version line and the header.
fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# cluster-forge v0.1.0 "));
    let split = |l: &str| l.split(',').map(str::to_string).collect::<Vec<_>>();
    let header = split(lines.next().unwrap());
    (header, lines.map(split).collect())
}

fn column(header: &[String], name: &str) -> usize {
    header
        .iter()
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn quality_reports_exact_fractions() {
    let text = stdout(&["quality", "--strategy", "modesty", "--n-max", "20", "--ps", "1/2"]);
    assert!(text.starts_with("# cluster-forge v0.1.0 quality\n"));
    let (header, rows) = csv_rows(&text);
    assert_eq!(rows.len(), 20);
    let row = rows.iter().find(|r| r[column(&header, "N")] == "4").unwrap();
    assert_eq!(row[column(&header, "quality")], "13/8");
}

#[test]
fn quality_float_path() {
    let (header, rows) = csv_rows(&stdout(&[
        "quality",
        "--strategy",
        "greed",
        "--n-max",
        "4",
        "--ps",
        "0.5",
    ]));
    let q: f64 = rows[3][column(&header, "quality")].parse().unwrap();
    assert!((q - 1.5).abs() < 1e-12);
}

#[test]
fn quality_all_orders_strategies() {
    let (header, rows) = csv_rows(&stdout(&["quality", "--n-max", "16"]));
    let q = |name: &str, n: &str| {
        let row = rows
            .iter()
            .find(|r| r[column(&header, "strategy")] == name && r[column(&header, "N")] == n)
            .unwrap();
        parse_exact(&row[column(&header, "quality")]).unwrap()
    };
    for n in ["8", "12", "16"] {
        assert!(q("optimal", n) >= q("modesty", n));
        assert!(q("modesty", n) >= q("greed", n));
        assert!(q("optimal", n) >= q("static", n));
    }
    assert_eq!(q("optimal", "8").to_string(), "649/256");
}

#[test]
fn bounds_at_ten() {
    let (header, rows) = csv_rows(&stdout(&["bounds", "--n", "10"]));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][column(&header, "analytic_upper")], "4");
    assert_eq!(rows[0][column(&header, "lp_upper")], "4");
    let v = |name| parse_exact(&rows[0][column(&header, name)]).unwrap();
    assert!(v("lower") <= v("optimal"));
    assert!(v("optimal") <= v("razor_upper"));
}

#[test]
fn razor_upper_column_is_non_increasing() {
    let (header, rows) = csv_rows(&stdout(&["razor", "--n", "30", "--r-max", "6", "--with-optimal"]));
    assert_eq!(rows.len(), 5);
    let upper: Vec<_> = rows
        .iter()
        .map(|r| parse_exact(&r[column(&header, "upper")]).unwrap())
        .collect();
    assert!(upper.windows(2).all(|w| w[1] <= w[0]));
    let q = parse_exact(&rows[0][column(&header, "optimal")]).unwrap();
    assert!(upper.iter().all(|u| *u >= q));
}

#[test]
fn mc_json_is_tagged_and_reproducible() {
    let args = [
        "mc",
        "--strategy",
        "modesty",
        "--n",
        "12",
        "--ps",
        "0.5",
        "--trials",
        "20000",
        "--seed",
        "9",
    ];
    let a = stdout(&args);
    let mut threaded = vec!["--threads", "1"];
    threaded.extend(args);
    let b = stdout(&threaded);
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["schema"], "cluster-forge/simulation-report/v1");
    assert_eq!(v["trials"], 20000);
    assert!(v["std_error"].as_f64().unwrap() > 0.0);
}

#[test]
fn mc_covers_every_strategy() {
    for s in ["greed", "modesty", "static", "optimal", "two-stage"] {
        let text = stdout(&["mc", "--strategy", s, "--n", "10", "--ps", "3/10", "--trials", "500"]);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(v["mean_length"].as_f64().unwrap() > 0.0, "{s}");
    }
}

#[test]
fn weave_rows() {
    let (header, rows) = csv_rows(&stdout(&[
        "weave", "--n", "3,10", "--a", "3", "--ps", "1/2", "--trials", "5000",
    ]));
    assert_eq!(
        header,
        [
            "n",
            "pi_s",
            "P_s",
            "hoeffding",
            "mc_estimate",
            "mc_ci_low",
            "mc_ci_high"
        ]
    );
    assert_eq!(rows.len(), 2);
    for r in &rows {
        let f = |i: usize| r[i].parse::<f64>().unwrap();
        assert!(f(3) <= f(1));
        assert!(f(5) <= f(4) && f(4) <= f(6));
    }
    let (_, rows) = csv_rows(&stdout(&[
        "weave", "--n", "5", "--a", "2", "--ps", "1", "--trials", "100",
    ]));
    assert_eq!(rows[0][4], "1");
}

#[test]
fn percolation_scan_brackets_threshold() {
    let text = stdout(&["percolation-scan", "--a", "2", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["schema"], "cluster-forge/percolation-scan/v1");
    assert_eq!(v["bracket_contains_threshold"], true);
    let (_, rows) = csv_rows(&stdout(&[
        "percolation-scan",
        "--a",
        "2",
        "--ps",
        "0.5,0.9",
        "--n",
        "50,100",
    ]));
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0][7], "true");
}

#[test]
fn validate_passes_at_small_sizes() {
    let text = stdout(&["validate", "--n-max", "8", "--lemma-size", "7", "--lp-max", "40"]);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["passed"], true);
    assert!(v["checks"].as_array().unwrap().len() >= 8);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["quality", "--bogus"]).status.code(), Some(1));
    assert_eq!(run(&["quality", "--n-max", "4", "--ps", "3/2"]).status.code(), Some(1));
    assert_eq!(run(&["razor", "--n", "5", "--r-min", "1"]).status.code(), Some(1));
    assert_eq!(
        run(&["mc", "--strategy", "two-stage", "--block", "1", "--n", "8"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        run(&["optimal-table", "--n", "12", "--budget", "10"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["quality", "--n-max", "12", "--budget", "10"]).status.code(),
        Some(2)
    );
    // The slope hypothesis of the lower bound fails for N0 = 18.
    assert_eq!(run(&["bounds", "--n", "18", "--n0", "18"]).status.code(), Some(3));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn output_files_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str| {
        let path = dir.path().join(name);
        stdout(&["quality", "--n-max", "10", "-o", path.to_str().unwrap()]);
        std::fs::read(path).unwrap()
    };
    assert_eq!(write("a.csv"), write("b.csv"));
}

fn table_files(dir: &Path) -> Vec<String> {
    let mut names: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    names
}

#[test]
fn optimal_table_is_cached() {
    let dir = tempfile::tempdir().unwrap();
    let cached = |args: &[&str]| {
        let out = Command::new(env!("CARGO_BIN_EXE_cluster-forge"))
            .args(args)
            .env("CLUSTER_FORGE_TABLE_DIR", dir.path())
            .output()
            .unwrap();
        assert!(out.status.success());
        String::from_utf8(out.stdout).unwrap()
    };
    let first = cached(&["optimal-table", "--n", "8"]);
    assert!(first.starts_with("N=8 ps=1/2\n"));
    assert!(first.contains("1^4\t13/8\t1,1\n"));
    assert_eq!(table_files(dir.path()), ["optimal-N8-ps1-2.tsv"]);
    assert_eq!(
        std::fs::read_to_string(dir.path().join("optimal-N8-ps1-2.tsv")).unwrap(),
        first
    );
    assert_eq!(cached(&["optimal-table", "--n", "8"]), first);
    let q = cached(&["quality", "--strategy", "optimal", "--n-max", "8"]);
    assert!(q.contains("8,optimal,1/2,649/256,"));
    assert_eq!(table_files(dir.path()), ["optimal-N8-ps1-2.tsv"]);
}
