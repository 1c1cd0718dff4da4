use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn entlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_entlab")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn verify_single_seed_passes() {
    let o = entlab(&["verify", "lemma1", "--seeds", "1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().filter(|l| l.ends_with("pass") && l.starts_with("lemma1")).count(), 1, "{out}");
    assert!(out.contains("(seed 42)"));
}

#[test]
fn forced_tolerance_fails_with_exit_one() {
    let o = entlab(&["verify", "lemma1", "--seeds", "1", "--tolerance", "1e-30"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("overall: FAIL"));
    let o = entlab(&["verify", "ppt", "--seeds", "2", "--tolerance", "ppt network=1e-30"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&entlab(&["verify", "nonsense"])), 2);
    assert_eq!(code(&entlab(&["verify", "lemma1", "--seeds", "0"])), 2);
    assert_eq!(code(&entlab(&["verify", "lemma1", "--tolerance", "abc"])), 2);
    assert_eq!(code(&entlab(&["concurrence", "/nonexistent/state.json"])), 2);
}

#[test]
fn concurrence_fixtures() {
    let dir = TempDir::new().unwrap();
    let bell = write(&dir, "bell.json", r#"{"family": "bell"}"#);
    let o = entlab(&["concurrence", &bell]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("C = 1.000000"), "{}", stdout(&o));
    let werner = write(&dir, "werner.json", r#"{"family": "werner", "params": {"p": 0.5}}"#);
    for method in ["oracle", "projective", "permutation"] {
        let o = entlab(&["concurrence", &werner, "--method", method]);
        assert_eq!(code(&o), 0);
        assert!(stdout(&o).contains("C = 0.250000"), "{method}: {}", stdout(&o));
    }
}

#[test]
fn invalid_state_files_exit_two() {
    let dir = TempDir::new().unwrap();
    let trace = write(&dir, "t.json", r#"{"dims": [2], "matrix": [[[0.45, 0], [0, 0]], [[0, 0], [0.45, 0]]]}"#);
    let o = entlab(&["concurrence", &trace]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("trace"), "{}", stderr(&o));
    let broken = write(&dir, "b.json", "{\n  \"family\": \"bell\"\n  \"params\": {}\n}");
    let o = entlab(&["concurrence", &broken]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn non_two_qubit_needs_oracle() {
    let dir = TempDir::new().unwrap();
    let qutrits = write(&dir, "q.json", r#"{"family": "random", "params": {"seed": 1, "dims": [3, 3]}}"#);
    let o = entlab(&["concurrence", &qutrits, "--method", "projective"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("two qubits"));
    let o = entlab(&["concurrence", &qutrits, "--method", "oracle"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("ccnr"));
}

#[test]
fn estimate_rejects_few_shots_and_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let bell = write(&dir, "bell.json", r#"{"family": "bell"}"#);
    assert_eq!(code(&entlab(&["estimate", &bell, "--shots", "10"])), 2);
    let args = ["estimate", bell.as_str(), "--shots", "20000", "--bootstrap", "200"];
    let a = entlab(&args);
    let b = entlab(&args);
    let c = entlab(&[&args[..], &["--workers", "3"]].concat());
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    let d = entlab(&[&args[..], &["--seed", "7"]].concat());
    assert_ne!(a.stdout, d.stdout);
}

#[test]
fn resources_report_has_baseline() {
    let dir = TempDir::new().unwrap();
    let bell = write(&dir, "bell.json", r#"{"family": "bell"}"#);
    let o = entlab(&["resources", &bell, "--k", "2", "--json"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["data"]["comparison"]["tomography_baseline_pairs"], 9);
    assert!(v["pass"].as_bool().unwrap());
    assert_eq!(code(&entlab(&["resources", &bell, "--k", "5"])), 2);
}

#[test]
fn emitted_state_round_trips() {
    let dir = TempDir::new().unwrap();
    let family = write(&dir, "f.json", r#"{"family": "random", "params": {"seed": 42, "dims": [2, 2], "rank": 3}}"#);
    let o = entlab(&["state", "random", "--rank", "3"]);
    assert_eq!(code(&o), 0);
    let matrix = write(&dir, "m.json", &stdout(&o));
    let a: Value = serde_json::from_str(&stdout(&entlab(&["concurrence", &family, "--json"]))).unwrap();
    let b: Value = serde_json::from_str(&stdout(&entlab(&["concurrence", &matrix, "--json"]))).unwrap();
    assert_eq!(a["data"], b["data"]);
    // A second emission from the matrix form is byte-identical.
    let again = entlab(&["state", "random", "--rank", "3"]);
    assert_eq!(again.stdout, o.stdout);
    assert!(Path::new(&matrix).exists());
}

#[test]
fn dim_cap_env_is_honoured() {
    let o = Command::new(env!("CARGO_BIN_EXE_entlab"))
        .args(["verify", "lemma2", "--seeds", "1"])
        .env("ENTLAB_DIM_CAP", "1000")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("cap"), "{}", stderr(&o));
    let o = Command::new(env!("CARGO_BIN_EXE_entlab"))
        .args(["verify", "lemma1", "--seeds", "1"])
        .env("ENTLAB_DIM_CAP", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn json_report_shape() {
    let o = entlab(&["verify", "theorem1", "--seeds", "2", "--json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["command"], "verify");
    assert_eq!(v["seed"], 42);
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));
    assert!(!stdout(&o).contains("wall"));
}
