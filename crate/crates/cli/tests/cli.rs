use std::path::Path;
use std::process::{Command, Output};

fn edgeprice(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edgeprice")).args(args).output().expect("binary runs")
}

fn gen(dir: &Path, name: &str, seed: &str, m: &str, n: &str, k: &str) -> String {
    let path = dir.join(name);
    let out = edgeprice(&["gen", "--seed", seed, "--m", m, "--n", n, "--k", k, "--out", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path.to_str().unwrap().to_string()
}

fn report(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("solve prints a JSON report")
}

#[test]
fn gen_then_solve_reports_an_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen(dir.path(), "inst.json", "0", "3", "2", "2");
    let mps = dir.path().join("p2.mps");
    let out = edgeprice(&["solve", "--instance", &inst, "--mps-out", mps.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = report(&out);
    assert_eq!(rep["status"], "optimal");
    assert_eq!(rep["method"], "dual");
    assert!(rep["profit"].is_number());
    assert!(std::fs::read_to_string(mps).unwrap().contains("ENDATA"));
}

#[test]
fn methods_agree_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen(dir.path(), "inst.json", "1", "2", "1", "2");
    let profit = |method: &str| {
        let out = edgeprice(&["solve", "--instance", &inst, "--method", method, "--gap", "0"]);
        assert_eq!(out.status.code(), Some(0), "{method}: {}", String::from_utf8_lossy(&out.stderr));
        report(&out)["profit"].as_f64().unwrap()
    };
    let oracle = profit("oracle");
    for method in ["kkt", "dual", "single-en"] {
        let p = profit(method);
        assert!((p - oracle).abs() <= 1e-6 * (1.0 + oracle.abs()), "{method}: {p} vs {oracle}");
    }
}

#[test]
fn unreachable_delay_caps_exit_with_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen(dir.path(), "inst.json", "0", "2", "1", "1");
    let mut json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&inst).unwrap()).unwrap();
    json["delayCap"] = serde_json::json!([1.0]);
    std::fs::write(&inst, json.to_string()).unwrap();
    let out = edgeprice(&["solve", "--instance", &inst]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(report(&out)["status"], "infeasible");
}

#[test]
fn zero_time_limit_exits_with_limit_code() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen(dir.path(), "inst.json", "0", "6", "3", "4");
    let out = edgeprice(&["solve", "--instance", &inst, "--time-limit", "0"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn usage_errors_exit_with_four() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen(dir.path(), "inst.json", "0", "2", "2", "1");
    assert_eq!(edgeprice(&["solve", "--instance", &inst, "--method", "simplex"]).status.code(), Some(4));
    assert_eq!(edgeprice(&["solve", "--instance", &inst, "--scheme", "weekly"]).status.code(), Some(4));
    assert_eq!(edgeprice(&["solve", "--instance", &inst, "--method", "single-en"]).status.code(), Some(4));
    assert_eq!(edgeprice(&["frobnicate"]).status.code(), Some(4));
    assert_eq!(edgeprice(&["sweep", "--axis", "m", "--values", "1.5", "--out", "x"]).status.code(), Some(4));
    assert_eq!(edgeprice(&["--help"]).status.code(), Some(0));
}

#[test]
fn sweep_writes_csv_and_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let out = edgeprice(&[
        "sweep",
        "--axis",
        "lambda",
        "--values",
        "1,2",
        "--schemes",
        "dyn,avg",
        "--m",
        "2",
        "--n",
        "2",
        "--k",
        "1",
        "--out",
        out_dir.to_str().unwrap(),
        "--sequential",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("sweep_lambda.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 2);
    assert!(out_dir.join("instances").read_dir().unwrap().count() >= 2);
}
