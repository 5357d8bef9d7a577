use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn mixdag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mixdag")).args(args).env_remove("MIXDAG_SEED").output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = mixdag(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn p(dir: &Path, f: &str) -> String {
    dir.join(f).to_str().unwrap().to_string()
}

const FIG8_MIXTURE: &str = r#"{
  "roles": {},
  "waves": {"O1": 1, "O2": 2, "O3": 2},
  "t": ["T1"],
  "components": [[["O1", "O2"]], [["O2", "O3"]]]
}"#;

fn fig8_inputs(dir: &Path) {
    fs::write(dir.join("m.json"), FIG8_MIXTURE).unwrap();
    fs::write(dir.join("w.json"), r#"{"O1": 1, "O2": 2, "O3": 2}"#).unwrap();
}

#[test]
fn fixtures_pass_on_bundled_truth() {
    let out = ok(&["fixtures"]);
    let s = String::from_utf8(out.stdout).unwrap();
    assert!(s.contains("PASS fig4"));
    assert!(!s.contains("FAIL"));
}

#[test]
fn corrupted_fig4_truth_exits_4() {
    let d = TempDir::new().unwrap();
    fs::write(d.path().join("bad.txt"), "X1\nX2\nX3\nX4\nX1 --> X2\nX2 --> X3\n").unwrap();
    let out = mixdag(&["fixtures", "--fig4-truth", &p(d.path(), "bad.txt")]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL fig4"));
}

#[test]
fn oracle_discover_is_deterministic_and_pc_gives_collider() {
    let d = TempDir::new().unwrap();
    fig8_inputs(d.path());
    let (m, w) = (p(d.path(), "m.json"), p(d.path(), "w.json"));
    for out in ["a.txt", "b.txt"] {
        ok(&["discover", "--ci-test", "oracle", "--mixture", &m, "--waves", &w, "--out", &p(d.path(), out)]);
    }
    let a = fs::read_to_string(d.path().join("a.txt")).unwrap();
    assert_eq!(a, fs::read_to_string(d.path().join("b.txt")).unwrap());
    assert_eq!(
        fs::read_to_string(d.path().join("a.txt.log.json")).unwrap(),
        fs::read_to_string(d.path().join("b.txt.log.json")).unwrap()
    );
    assert!(a.contains("O1 o-> O2"), "{a}");

    ok(&["discover", "--ci-test", "oracle", "--mixture", &m, "--waves", &w, "--algorithm", "pc", "--out", &p(d.path(), "pc.txt")]);
    let pc = fs::read_to_string(d.path().join("pc.txt")).unwrap();
    assert!(pc.contains("O1 --> O2") && pc.contains("O3 --> O2"), "{pc}");
}

#[test]
fn decision_log_lists_queries() {
    let d = TempDir::new().unwrap();
    fig8_inputs(d.path());
    ok(&[
        "discover",
        "--ci-test",
        "oracle",
        "--mixture",
        &p(d.path(), "m.json"),
        "--waves",
        &p(d.path(), "w.json"),
        "--out",
        &p(d.path(), "g.txt"),
        "--log",
        &p(d.path(), "log.json"),
    ]);
    let log: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.path().join("log.json")).unwrap()).unwrap();
    let q = log["queries"].as_array().unwrap();
    assert!(!q.is_empty());
    // O1 and O3 are separated by the empty set
    assert!(q.iter().any(|r| r["x"] == "O1" && r["y"] == "O3" && r["given"].as_array().unwrap().is_empty() && r["independent"] == true));
}

#[test]
fn simulate_discover_evaluate_pipeline() {
    let d = TempDir::new().unwrap();
    let sim = p(d.path(), "sim");
    ok(&["--seed", "5", "simulate", "--out", &sim, "--p", "9", "--samples", "600", "--q-min", "2", "--q-max", "3"]);
    let sim = d.path().join("sim");
    for f in ["data.csv", "waves.json", "truth.txt", "mixture.json", "manifest.json"] {
        assert!(sim.join(f).exists(), "{f} missing");
    }
    let w = p(&sim, "waves.json");
    let g = p(d.path(), "g.txt");
    let out = mixdag(&["discover", "--csv", &p(&sim, "data.csv"), "--waves", &w, "--ci-test", "fisher-z", "--alpha", "0.01", "--out", &g]);
    assert!(matches!(out.status.code(), Some(0) | Some(3)), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = ok(&["evaluate", "--estimate", &g, "--truth", &p(&sim, "truth.txt"), "--waves", &w, "--min-wave", "2"]);
    let v: serde_json::Value = serde_json::from_slice(&rep.stdout).unwrap();
    assert!(v["overall"].as_f64().is_some());
    assert!(v["skeleton_f1"].as_f64().is_some());
}

#[test]
fn simulate_is_byte_identical_for_a_seed() {
    let d = TempDir::new().unwrap();
    for out in ["a", "b"] {
        ok(&["simulate", "--out", &p(d.path(), out), "--p", "6", "--samples", "100", "--q-min", "2", "--q-max", "2", "--seed", "11"]);
    }
    for f in ["data.csv", "truth.txt", "mixture.json", "manifest.json"] {
        assert_eq!(fs::read(d.path().join("a").join(f)).unwrap(), fs::read(d.path().join("b").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn seed_comes_from_the_environment() {
    let d = TempDir::new().unwrap();
    let run = |dir: &str, env: Option<&str>, flag: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_mixdag"));
        c.env_remove("MIXDAG_SEED");
        if let Some(s) = env {
            c.env("MIXDAG_SEED", s);
        }
        if let Some(s) = flag {
            c.args(["--seed", s]);
        }
        c.args(["simulate", "--out", &p(d.path(), dir), "--p", "6", "--samples", "50", "--q-min", "2", "--q-max", "2"]);
        assert!(c.status().unwrap().success());
        fs::read(d.path().join(dir).join("data.csv")).unwrap()
    };
    assert_eq!(run("env", Some("9"), None), run("flag", None, Some("9")));
    assert_ne!(run("env", Some("9"), None), run("zero", None, None));
}

#[test]
fn bootstrap_on_standin_is_deterministic() {
    let d = TempDir::new().unwrap();
    let sim = d.path().join("s");
    ok(&["simulate", "--preset", "standin", "--out", sim.to_str().unwrap(), "--samples", "400"]);
    let args = |out: &str, csv: &str| -> Vec<String> {
        [
            "--seed", "3", "--jobs", "2", "evaluate", "--bootstrap", "4", "--csv", &p(&sim, "data.csv"), "--waves", &p(&sim, "waves.json"),
            "--relations", &p(&sim, "relations.txt"), "--temporal-negatives", "--merge-waves", "3:2", "--max-cond-size", "2",
            "--out", &p(d.path(), out), "--replicates-csv", &p(d.path(), csv),
        ]
        .iter()
        .map(|s| s.to_string())
        .collect()
    };
    for (o, c) in [("a.json", "a.csv"), ("b.json", "b.csv")] {
        let a = args(o, c);
        ok(&a.iter().map(String::as_str).collect::<Vec<_>>());
    }
    let a = fs::read_to_string(d.path().join("a.json")).unwrap();
    assert_eq!(a, fs::read_to_string(d.path().join("b.json")).unwrap());
    assert_eq!(fs::read(d.path().join("a.csv")).unwrap(), fs::read(d.path().join("b.csv")).unwrap());
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["reports"].as_array().unwrap().len(), 2);
}

#[test]
fn input_errors_exit_2() {
    let d = TempDir::new().unwrap();
    fs::write(d.path().join("w.json"), r#"{"A": 1, "B": 2}"#).unwrap();
    fs::write(d.path().join("d.csv"), "A,B\n1,2\n3,\n").unwrap();
    let out = mixdag(&["discover", "--csv", &p(d.path(), "d.csv"), "--waves", &p(d.path(), "w.json"), "--out", &p(d.path(), "g.txt")]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("row 2") && err.contains('B'), "{err}");

    let out = mixdag(&["discover", "--ci-test", "oracle", "--waves", &p(d.path(), "w.json"), "--out", &p(d.path(), "g.txt")]);
    assert_eq!(out.status.code(), Some(2));

    let out = mixdag(&["discover", "--csv", &p(d.path(), "d.csv"), "--waves", &p(d.path(), "w.json"), "--alpha", "1.5", "--out", &p(d.path(), "g.txt")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oracle_check_runs_a_small_suite() {
    let out = ok(&["oracle-check", "--suite", "soundness", "--instances", "5"]);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("PASS"));
}
