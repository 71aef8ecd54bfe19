use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn lrad(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lrad")).args(args).output().unwrap()
}

fn run_descriptor(dir: &Path, json: &str) -> Output {
    let path = dir.join("descriptor.json");
    std::fs::write(&path, json).unwrap();
    let out = dir.join("out");
    lrad(&["run", path.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn missing_descriptor_exits_2() {
    assert_eq!(code(&lrad(&["run", "/nonexistent/descriptor.json"])), 2);
}

#[test]
fn malformed_json_exits_3() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&run_descriptor(dir.path(), "{\"experiment\": ")), 3);
}

#[test]
fn invalid_descriptors_exit_4() {
    let dir = TempDir::new().unwrap();
    for json in [
        r#"{"experiment": "quadratic", "foo": 1}"#,
        r#"{"experiment": "supervised", "eta": 1.0}"#,
        r#"{"experiment": "warp_drive"}"#,
        r#"{"experiment": "quadratic", "pde_time": 1.0}"#,
        r#"{"experiment": "supervised", "batch": 0}"#,
    ] {
        let o = run_descriptor(dir.path(), json);
        assert_eq!(code(&o), 4, "{json}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn literal_adam_requires_adam() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("d.json");
    std::fs::write(&path, r#"{"experiment": "quadratic", "steps": 5}"#).unwrap();
    let out = dir.path().join("out");
    let o = lrad(&["run", path.to_str().unwrap(), "--out", out.to_str().unwrap(), "--literal-adam"]);
    assert_eq!(code(&o), 4);
}

#[test]
fn zero_step_quadratic_reports_only_the_origin() {
    let dir = TempDir::new().unwrap();
    let o = run_descriptor(dir.path(), r#"{"experiment": "quadratic", "steps": 0, "seeds": 2}"#);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let conv = std::fs::read_to_string(dir.path().join("out/convergence.csv")).unwrap();
    let lines: Vec<&str> = conv.lines().collect();
    assert_eq!(lines[0], "t,seeds,mean_sq_dist");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("0.0000000000000000e0,2,"));
}

#[test]
fn small_runs_are_deterministic_and_traced() {
    let json = r#"{"experiment": "supervised", "seeds": 2, "steps": 60, "batch": 16, "test_size": 64,
                  "trial_steps": 5, "tolerance": 20, "grid_size": 3, "arch": {"widths": [6, 8, 1], "activation": "relu"},
                  "eval_every": 10}"#;
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for dir in [&a, &b] {
        let o = run_descriptor(dir.path(), json);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["summary.csv", "trace_seed0.csv", "trace_seed1.csv", "trace_seed1_constant.csv", "config.resolved.json"] {
        let x = std::fs::read(a.path().join("out").join(f)).unwrap();
        let y = std::fs::read(b.path().join("out").join(f)).unwrap();
        if f.ends_with(".json") {
            assert_eq!(x.len(), y.len(), "{f}");
        } else {
            assert_eq!(x, y, "{f}");
        }
    }
    let trace = std::fs::read_to_string(a.path().join("out/trace_seed0.csv")).unwrap();
    assert_eq!(trace.lines().next().unwrap(), "step,train_loss,test_loss,lr,clock,event");
    assert_eq!(trace.lines().count(), 61);
}

#[test]
fn verify_passes_on_default_seed() {
    let o = lrad(&["verify"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(text.lines().count(), 10);
    assert!(text.lines().all(|l| l.ends_with("PASS")));
}
