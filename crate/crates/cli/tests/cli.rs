use std::path::Path;
use std::process::{Command, Output};

use aosi_core::{average_aosi, objective_f, transmit_fractions, ModelParams, RawParams, Threshold, ThresholdPolicy};

fn aosi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aosi")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn field<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines().find_map(|l| l.strip_prefix(key)).unwrap_or_else(|| panic!("no `{key}` in {text}")).trim()
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path).unwrap().lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn solve_reports_finite_thresholds_and_monotone_value() {
    let out = aosi(&["solve", "--lambda1", "1", "--lambda2", "2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(field(&text, "thresholds:"), "(3, 4)");
    assert_eq!(field(&text, "monotone:"), "true");
    let theta: f64 = field(&text, "theta:").parse().unwrap();
    assert!((theta - 6.05577809466).abs() < 1e-9);
}

#[test]
fn solve_without_a_working_channel_never_transmits() {
    let out = aosi(&["solve", "--rho", "0"]);
    assert!(out.status.success());
    assert_eq!(field(&stdout(&out), "thresholds:"), "(inf, inf)");
}

#[test]
fn solve_writes_value_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = aosi(&["solve", "--s-max", "50", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("value.csv")).unwrap();
    assert!(csv.starts_with("s,V,action\n"));
    assert_eq!(csv.lines().count(), 52);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("solve.json")).unwrap()).unwrap();
    assert_eq!(summary["n1"], 3);
}

#[test]
fn solve_exit_codes_for_solver_failures() {
    assert_eq!(aosi(&["solve", "--max-iter", "3"]).status.code(), Some(3));
    assert_eq!(aosi(&["solve", "--s-max", "5"]).status.code(), Some(2));
}

#[test]
fn malformed_config_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"r0\": 0.1,").unwrap();
    let out = aosi(&["solve", "--params", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("malformed config"));

    std::fs::write(&path, "{\"r0\": 0.1, \"typo\": 1}").unwrap();
    assert_eq!(aosi(&["solve", "--params", path.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.json");
    std::fs::write(&path, r#"{"lambda1": 6, "lambda2": 9, "f_mode": "kernel"}"#).unwrap();
    let p = path.to_str().unwrap();
    let from_file = stdout(&aosi(&["optimize", "--params", p]));
    assert_eq!(field(&from_file, "best:"), "(14, 14)");
    let overridden = stdout(&aosi(&["optimize", "--params", p, "--lambda1", "1", "--lambda2", "2"]));
    assert_eq!(field(&overridden, "best:"), "(3, 4)");
}

#[test]
fn evaluate_prints_the_steady_state_row() {
    let out = aosi(&["evaluate", "--n1", "2", "--n2", "5"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n1,n2,avg_aosi,frac_c,frac_u,F"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let params = ModelParams::new(RawParams::reference(1.0, 2.0)).unwrap();
    let n = ThresholdPolicy::finite(2, 5);
    assert_eq!(&row[..2], ["2", "5"]);
    assert!((row[2].parse::<f64>().unwrap() - average_aosi(&params, n)).abs() < 1e-10);
    assert!((row[5].parse::<f64>().unwrap() - objective_f(&params, n)).abs() < 1e-10);

    assert_eq!(aosi(&["evaluate", "--n1", "5", "--n2", "2"]).status.code(), Some(2));
    assert_eq!(aosi(&["evaluate", "--n1", "2"]).status.code(), Some(2));
    assert!(aosi(&["evaluate", "--n1", "inf", "--n2", "inf"]).status.success());
}

#[test]
fn descent_and_grid_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = aosi(&["optimize", "--method", "descent", "--n-max", "20", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(field(&stdout(&out), "method:"), "coordinate_descent");
    let grid = std::fs::read_to_string(dir.path().join("grid.csv")).unwrap();
    assert!(grid.starts_with("n1,n2,F\n"));
    assert_eq!(grid.lines().count(), 1 + 21 * 22 / 2);
}

#[test]
fn simulate_is_reproducible() {
    let args = ["simulate", "--n1", "2", "--n2", "5", "--horizon", "200000", "--seed", "9"];
    let (a, b) = (aosi(&args), aosi(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(field(&stdout(&a), "samples:"), "198000");
}

#[test]
fn verify_passes_on_reference_parameters() {
    let out = aosi(&["verify"]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(0), "{report:#}");
    assert_eq!(report["pass"], true);
    let names: Vec<&str> = report["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    for expected in ["gain_vs_closed_form_minimum", "thresholds_match_optimum", "f_arbitration", "value_monotone"] {
        assert!(names.contains(&expected), "{names:?}");
    }
}

#[test]
fn verify_flags_the_literal_state_zero_constant() {
    let out = aosi(&["verify", "--f-mode", "paper-literal"]);
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let arb = report["checks"].as_array().unwrap().iter().find(|c| c["name"] == "f_arbitration").unwrap();
    assert_eq!(arb["pass"], false);
    assert!(arb["measured"].as_f64().unwrap() > 5.0);
}

#[test]
fn verify_rejects_drifting_source() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.json");
    std::fs::write(&path, r#"{"r0": 0.05, "r1": 0.9}"#).unwrap();
    assert_eq!(aosi(&["verify", "--params", path.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn sweep_reproduces_grid_shape_and_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let run = |dir: &Path, jobs: &str| {
        let out = aosi(&["sweep", "--out", dir.to_str().unwrap(), "--jobs", jobs, "--check-solver"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    };
    run(a.path(), "1");
    run(b.path(), "4");
    for name in [
        "cost_grid.csv",
        "fractions.csv",
        "solver_check.csv",
        "failures.log",
        "cost_vs_lambda1.svg",
        "cost_vs_lambda2.svg",
        "fractions_vs_lambda2.svg",
        "policy_grid.svg",
    ] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        assert_eq!(x, std::fs::read(b.path().join(name)).unwrap(), "{name} differs");
    }

    let base = ModelParams::new(RawParams::reference(0.0, 0.0)).unwrap();
    let cost = read_csv(&a.path().join("cost_grid.csv"));
    assert_eq!(cost.len(), 100);
    let num = |s: &str| s.parse::<f64>().unwrap();
    for row in &cost {
        let params = base.with_energies(num(&row[0]), num(&row[1])).unwrap();
        let n =
            ThresholdPolicy::new(row[2].parse::<Threshold>().unwrap(), row[3].parse::<Threshold>().unwrap()).unwrap();
        let (fc, fu) = transmit_fractions(&params, n);
        let parts = average_aosi(&params, n) + params.lambda1() * fc + params.lambda2() * fu;
        assert!((num(&row[4]) - parts).abs() <= 1e-9, "{row:?}");
    }
    let column: Vec<&str> = cost.iter().filter(|r| r[1] == "0").map(|r| r[4].as_str()).collect();
    assert!(column.iter().all(|f| *f == column[0]));

    let fractions = read_csv(&a.path().join("fractions.csv"));
    assert!(fractions.iter().filter(|r| r[0] == "6").all(|r| r[2] == "0"));
    assert!(fractions.iter().filter(|r| r[0] == "1").any(|r| num(&r[2]) > 0.0));

    let solver = read_csv(&a.path().join("solver_check.csv"));
    assert!(solver.iter().all(|r| r[7] == "true" && num(&r[6]) <= 1e-6));
}

#[test]
fn sweep_logs_failed_cells_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    let out = aosi(&[
        "sweep",
        "--out",
        dir.path().to_str().unwrap(),
        "--n-max",
        "1",
        "--lambda1-grid",
        "0,9",
        "--lambda2-grid",
        "0,9",
    ]);
    assert!(out.status.success());
    let log = std::fs::read_to_string(dir.path().join("failures.log")).unwrap();
    assert!(log.contains("lambda1=9,lambda2=9: optimize:"), "{log}");
    let cost = read_csv(&dir.path().join("cost_grid.csv"));
    assert!(!cost.is_empty() && cost.len() < 4);
    assert!(std::fs::read_to_string(dir.path().join("policy_grid.svg")).unwrap().contains("failed"));
}

#[test]
fn sweep_rejects_negative_energies() {
    let dir = tempfile::tempdir().unwrap();
    let out = aosi(&["sweep", "--out", dir.path().to_str().unwrap(), "--lambda1-grid=-1,2"]);
    assert_eq!(out.status.code(), Some(2));
}
