use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_seqsearch"));
    c.env_remove("SEQSEARCH_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("run seqsearch")
}

fn json_out(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

#[test]
fn solve_symmetric_threshold() {
    let o = run(&["solve", "symmetric", "--n", "3", "--cost", "0.1", "--prize", "1", "--dist", "uniform:0,1"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json_out(&o);
    assert!((v["result"]["threshold"].as_f64().unwrap() - 0.70).abs() < 1e-12);
    assert_eq!(v["manifest"]["command"], "solve symmetric");
    assert_eq!(v["manifest"]["distribution"]["family"], "uniform");
}

#[test]
fn solve_planner_exponential() {
    let o = run(&["solve", "planner", "--n", "2", "--cost", "0.1", "--dist", "exponential:1"]);
    assert_eq!(o.status.code(), Some(0));
    let w = json_out(&o)["result"]["efficient_prize"].as_f64().unwrap();
    assert!((w - 1.0).abs() < 1e-9);
}

#[test]
fn not_viable_exits_2() {
    let o = run(&["solve", "symmetric", "--n", "2", "--cost", "0.6", "--prize", "1", "--dist", "uniform:0,1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not viable"));
}

#[test]
fn asymmetric_with_two_players_exits_2() {
    let o = run(&["solve", "asymmetric", "--n", "2", "--cost", "0.1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(run(&["solve", "symmetric", "--n", "2", "--cost", "0.1", "--dist", "normal:0,1"]).status.code(), Some(1));
    assert_eq!(run(&["solve", "symmetric", "--n", "2"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["solve", "symmetric", "--n", "1", "--cost", "0.1"]).status.code(), Some(1));
}

#[test]
fn version_and_help() {
    let o = run(&["--version"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains(env!("CARGO_PKG_VERSION")));
    assert!(text.contains(&format!("interface {}", seqsearch::output::INTERFACE_VERSION)));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn finite_k2_table() {
    let o = run(&["table", "finite_k2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "k,cost_ratio,N,a1_3dp,a1,exists,br_stable,peak");
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 24);
    let want = [0.572, 0.647, 0.691, 0.720, 0.740, 0.754, 0.762, 0.765];
    for (row, w) in rows[8..16].iter().zip(want) {
        assert_eq!(row[1], "0.05");
        let a: f64 = row[4].parse().unwrap();
        assert!((a - w).abs() <= 1e-3, "{row:?}");
    }
    assert_eq!(rows[15][7], "true");
}

#[test]
fn welfare_table() {
    let o = run(&["table", "welfare_examples", "--n", "2", "--cost", "0.1"]);
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert!(rows[0].starts_with("uniform,0.258,"));
    assert!(rows[1].starts_with("exponential,1.0,"));
    assert!(rows[2].starts_with("pareto,8.889,"));
}

#[test]
fn large_market_table() {
    let o = run(&["table", "large_market", "--team", "2", "--cost", "0.05", "--m-max", "5"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("M,accept_prob,limit_gap\n2,"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn verify_designer_foc_passes() {
    let o = run(&[
        "verify", "designer_foc", "--m", "2", "--team", "2", "--cost", "0.05", "--meta-prize", "1", "--dist", "uniform:0,1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v = json_out(&o);
    assert_eq!(v["result"]["pass"], true);
    assert!(v["result"]["report"]["relative_error"].as_f64().unwrap() < 1e-4);
}

#[test]
fn verify_failure_exits_3() {
    // a small run at this seed lands outside 3 SE by chance
    let o = run(&["verify", "dissipation", "--n", "2", "--cost", "0.1", "--reps", "2000", "--seed", "30"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAIL"));
}

#[test]
fn verify_dissipation_small_run() {
    let o = run(&[
        "verify", "dissipation", "--n", "2", "--cost", "0.1", "--dist", "pareto:2,1", "--reps", "50000", "--seed", "7",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v = json_out(&o);
    assert_eq!(v["manifest"]["seed"], 7);
    assert_eq!(v["result"]["report"]["simulation"]["config"]["replications"], 50000);
}

#[test]
fn seed_from_environment() {
    let o = bin()
        .env("SEQSEARCH_SEED", "99")
        .args(["verify", "recall", "--n", "2", "--cost", "0.1", "--reps", "2000"])
        .output()
        .unwrap();
    assert_eq!(json_out(&o)["manifest"]["seed"], 99);
}

#[test]
fn out_files_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    let p = path.to_str().unwrap();
    let args = ["--out", p, "verify", "recall", "--n", "3", "--cost", "0.05", "--reps", "5000"];
    assert_eq!(run(&args).status.code(), Some(0));
    let first = std::fs::read(&path).unwrap();
    assert_eq!(run(&args).status.code(), Some(0));
    assert_eq!(first, std::fs::read(&path).unwrap());
    let sequential: Vec<&str> = std::iter::once("--sequential").chain(args).collect();
    assert_eq!(run(&sequential).status.code(), Some(0));
    let v: Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    let before: Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(v["result"], before["result"]);

    let manifest: Value = serde_json::from_slice(&std::fs::read(dir.path().join("run.json.manifest.json")).unwrap()).unwrap();
    assert!(manifest["created_unix"].as_u64().is_some());
    assert_eq!(manifest["outputs"][0], p);
}

#[test]
fn profile_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("profile.csv");
    let o = run(&[
        "table", "profile", "--draws", "3", "--cost-ratio", "0.05", "--n-min", "2", "--n-max", "6", "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("N,a1,a2,exists\n2,"));
    let side: Value = serde_json::from_slice(&std::fs::read(dir.path().join("profile.json")).unwrap()).unwrap();
    assert_eq!(side["result"]["n_draws"], 3);
    assert!(dir.path().join("profile.csv.manifest.json").exists());
}

#[test]
fn dist_file_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.json");
    std::fs::write(&path, r#"{"family": "exponential", "params": {"rate": 2.0}}"#).unwrap();
    let o = run(&["solve", "symmetric", "--n", "2", "--cost", "0.1", "--dist-file", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let t = json_out(&o)["result"]["threshold"].as_f64().unwrap();
    assert!((t - (-(0.2f64).ln() / 2.0)).abs() < 1e-12);
}

#[test]
fn finite_without_equilibrium_exits_2() {
    let o = run(&["solve", "finite", "--n", "10", "--cost-ratio", "0.15", "--draws", "2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn multiprize_linear() {
    let o = run(&["solve", "multiprize", "--n", "4", "--cost", "0.1", "--linear", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json_out(&o);
    assert!((v["result"]["player_value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((v["result"]["dissipation_ratio"].as_f64().unwrap() - 0.6).abs() < 1e-12);
}
