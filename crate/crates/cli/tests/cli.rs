use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use oco_lt::trace_io::{load_trace_csv, TRACE_HEADER};

fn oco(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oco-lt"))
        .args(args)
        .current_dir(dir)
        .env_remove("OCO_LT_OUT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(path: impl AsRef<Path>) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn run_writes_trace_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = oco(
        dir.path(),
        &[
            "run",
            "--problem",
            "toy",
            "--algo",
            "clipped-ogd",
            "--T",
            "800",
            "--beta",
            "0.5",
            "--seed",
            "1",
            "--out",
            "out/",
        ],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(stdout(&o).contains("regret"));
    let rows = load_trace_csv(dir.path().join("out/trace.csv")).unwrap();
    assert_eq!(rows.len(), 800);
    let header = fs::read_to_string(dir.path().join("out/trace.csv")).unwrap();
    assert!(header.starts_with(&TRACE_HEADER.join(",")));
    let summary = json(dir.path().join("out/summary.json"));
    assert_eq!(summary["summary"]["horizon"], 800);
    assert_eq!(summary["config"]["variant"], "clipped-ogd");
}

#[test]
fn missing_horizon_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = oco(dir.path(), &["run", "--problem", "toy"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--T"));
    let o = oco(dir.path(), &["oracle", "--problem", "toy"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_values_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["run", "--T", "10", "--beta", "1.5"][..],
        &["run", "--T", "10", "--algo", "newton"],
        &["run", "--T", "10", "--problem", "chess"],
        &[
            "run",
            "--T",
            "10",
            "--algo",
            "clipped-ogd",
            "--lagrangian",
            "plain",
        ],
        &["run", "--T", "10", "--problem", "toy", "--d", "4"],
        &["run", "--T", "ten"],
        &["sweep", "--T", "10", "--seeds", "0"],
    ] {
        let o = oco(dir.path(), args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.conf"),
        "# toy run\nproblem = toy\nalgo = a-ogd\nT = 300\nseed = 4\nout = from-config\n",
    )
    .unwrap();
    let o = oco(dir.path(), &["run", "--config", "run.conf", "--T", "120"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let rows = load_trace_csv(dir.path().join("from-config/trace.csv")).unwrap();
    assert_eq!(rows.len(), 120);
    let summary = json(dir.path().join("from-config/summary.json"));
    assert_eq!(summary["config"]["variant"], "aogd");
    assert_eq!(summary["seed"], 4);

    fs::write(dir.path().join("bad.conf"), "T = 10\nwhat is this\n").unwrap();
    let o = oco(dir.path(), &["run", "--config", "bad.conf"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.conf:2"));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_oco-lt"))
        .args(["run", "--T", "50"])
        .current_dir(dir.path())
        .env("OCO_LT_OUT", "env-out")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("env-out/trace.csv").exists());
}

#[test]
fn sweep_cardinality_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str, jobs: &'static str| {
        vec![
            "sweep",
            "--T",
            "200,400",
            "--algos",
            "ogd,a-ogd,clipped-ogd",
            "--seeds",
            "3",
            "--jobs",
            jobs,
            "--out",
            out,
        ]
    };
    let a = oco(dir.path(), &args("a", "1"));
    assert_eq!(
        a.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&a.stderr)
    );
    let b = oco(dir.path(), &args("b", "4"));
    assert_eq!(b.status.code(), Some(0));
    let csv_a = fs::read(dir.path().join("a/sweep.csv")).unwrap();
    let csv_b = fs::read(dir.path().join("b/sweep.csv")).unwrap();
    assert_eq!(csv_a, csv_b);
    let text = String::from_utf8(csv_a).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "algo,T,seed,regret,sum_g,sum_clip,sum_clip_sq,max_step_violation"
    );
    assert_eq!(lines.len(), 1 + 3 * 2 * 3);
    assert!(lines[1].starts_with("ogd,200,0,"));
    let stats = fs::read_to_string(dir.path().join("a/sweep_stats.csv")).unwrap();
    assert_eq!(stats.lines().count(), 1 + 3 * 2);
    assert_eq!(
        fs::read(dir.path().join("a/sweep_stats.csv")).unwrap(),
        fs::read(dir.path().join("b/sweep_stats.csv")).unwrap()
    );
}

#[test]
fn sweep_records_failed_cells() {
    let dir = tempfile::tempdir().unwrap();
    // The toy problem has no strong-convexity constant.
    let o = oco(
        dir.path(),
        &[
            "sweep",
            "--T",
            "50",
            "--algos",
            "strong,clipped-ogd",
            "--seeds",
            "2",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    let text = fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().nth(1).unwrap().contains("NaN"));
    assert!(!text.lines().nth(3).unwrap().contains("NaN"));
}

#[test]
fn oracle_is_cached_and_feasible() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "oracle",
        "--problem",
        "dispatch",
        "--T",
        "288",
        "--seed",
        "0",
    ];
    let first = oco(dir.path(), &args);
    assert_eq!(
        first.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&first.stderr)
    );
    assert!(stdout(&first).starts_with("computed"));
    let second = oco(dir.path(), &args);
    assert!(stdout(&second).starts_with("cached"));
    let rec = json(dir.path().join("out/oracle.json"));
    assert!(rec["residual"].as_f64().unwrap() <= 1e-6);
    assert_eq!(rec["x"].as_array().unwrap().len(), 3);
    // A different horizon is a different entry.
    let other = oco(
        dir.path(),
        &["oracle", "--problem", "dispatch", "--T", "100"],
    );
    assert!(stdout(&other).starts_with("computed"));
}

#[test]
fn strong_variant_on_matrices_uses_unit_modulus() {
    let dir = tempfile::tempdir().unwrap();
    let o = oco(
        dir.path(),
        &[
            "run",
            "--algo",
            "strong",
            "--problem",
            "doubly-stochastic",
            "--d",
            "3",
            "--T",
            "200",
        ],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let summary = json(dir.path().join("out/summary.json"));
    assert_eq!(summary["epochs"][0]["params"]["h1"], 1.0);
}

#[test]
fn dispatch_with_demand_file_and_scale() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("demand.csv"),
        "t,demand\n1,400\n2,380\n3,350\n",
    )
    .unwrap();
    let o = oco(
        dir.path(),
        &[
            "run",
            "--problem",
            "dispatch",
            "--demand",
            "demand.csv",
            "--demand-scale",
            "0.1",
            "--T",
            "30",
        ],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let summary = json(dir.path().join("out/summary.json"));
    assert_eq!(summary["metadata"]["demand_scale"], "0.1");

    fs::write(dir.path().join("broken.csv"), "t,demand\n1,400\n2,lots\n").unwrap();
    let o = oco(
        dir.path(),
        &[
            "run",
            "--problem",
            "dispatch",
            "--demand",
            "broken.csv",
            "--T",
            "3",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn doubling_run_covers_horizon() {
    let dir = tempfile::tempdir().unwrap();
    let o = oco(dir.path(), &["run", "--T", "100", "--doubling"]);
    assert_eq!(o.status.code(), Some(0));
    let summary = json(dir.path().join("out/summary.json"));
    assert_eq!(summary["epochs"].as_array().unwrap().len(), 7);
    assert_eq!(
        load_trace_csv(dir.path().join("out/trace.csv"))
            .unwrap()
            .len(),
        100
    );
}

#[test]
fn validate_subset_prints_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = oco(dir.path(), &["validate", "--only", "2,11"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("PASS"));
    assert!(text.contains("2 passed, 0 failed"));
    let o = oco(dir.path(), &["validate", "--only", "99"]);
    assert_eq!(o.status.code(), Some(2));
}

#[cfg(feature = "fault-injection")]
#[test]
fn corrupted_dual_update_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let o = oco(dir.path(), &["validate", "--only", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
}
