use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cube-spectral"));
    cmd.args(args).env_remove("CUBE_SPECTRAL_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

/// Manifest with the wall-clock fields blanked out.
fn stable_json(out: &Output) -> Value {
    let mut v: Value = serde_json::from_slice(&out.stdout).expect("json manifest");
    v["duration_ms"] = Value::Null;
    for r in v["reports"].as_array_mut().unwrap() {
        if r["name"].as_str().unwrap().ends_with("_seconds") {
            r["measured"] = Value::Null;
            r["pass"] = Value::Null;
        }
    }
    v
}

#[test]
fn manifest_schema_and_pass() {
    let out = run(&["verify", "--criterion", "3"], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    for key in ["command", "params", "seed", "version", "duration_ms", "reports"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["command"], "verify");
    for r in v["reports"].as_array().unwrap() {
        for key in ["name", "params", "measured", "bound", "tolerance", "pass"] {
            assert!(r.get(key).is_some(), "report missing {key}");
        }
    }
}

#[test]
fn core_suite_passes() {
    let out = run(&["verify", "--suite", "core", "--n", "12", "--seed", "7"], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn unknown_suite_is_a_usage_error() {
    let out = run(&["verify", "--suite", "bogus"], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("possible values"));
    assert_eq!(run(&["verify"], &[]).status.code(), Some(2));
    assert_eq!(run(&["density", "--gamma", "1.5"], &[]).status.code(), Some(2));
}

#[test]
fn failing_check_exits_one() {
    // the tail ratio at gamma = 0.3 is outside 2% at tau = 1e3
    let out = run(&["verify", "--criterion", "4", "--gamma", "0.3"], &[]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["reports"][0]["pass"], false);
}

#[test]
fn same_seed_same_manifest() {
    let args = ["verify", "--suite", "core", "--n", "8", "--seed", "11"];
    let a = run(&args, &[]);
    let b = run(&args, &[]);
    assert_eq!(stable_json(&a), stable_json(&b));
    let args = ["search", "--n", "5", "--seed", "3", "--p-grid", "1.5,2", "--iterations", "200", "--restarts", "4"];
    let a = run(&args, &[]);
    let b = run(&args, &[("CUBE_SPECTRAL_THREADS", "1")]);
    assert_eq!(stable_json(&a), stable_json(&b));
}

#[test]
fn thread_flag_overrides_env() {
    let out = run(&["search", "--n", "3", "--iterations", "50", "--restarts", "3", "--threads", "2"], &[("CUBE_SPECTRAL_THREADS", "0")]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&["search", "--n", "3", "--iterations", "50", "--restarts", "3"], &[("CUBE_SPECTRAL_THREADS", "0")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn csv_output_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scan.csv");
    let out = run(
        &["search", "--n", "4", "--p-grid", "1.5,2", "--iterations", "100", "--restarts", "3", "--format", "csv", "--out", path.to_str().unwrap()],
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "p,gamma,t,n,ratio,rate,restarts");
    assert_eq!(lines.len(), 3);
    let ratio: f64 = lines[2].split(',').nth(4).unwrap().parse().unwrap();
    assert!((ratio - (-1.0f64).exp()).abs() < 1e-6);
}

#[test]
fn density_csv_header() {
    let out = run(&["density", "--points", "3", "--format", "csv"], &[]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("tau,p_gamma,tail_ratio\n"));
}

#[test]
fn counterexample_delta_rows() {
    let out = run(&["counterexample", "--which", "delta", "--n", "101", "--format", "csv"], &[]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "101");
    let (value, bound): (f64, f64) = (row[3].parse().unwrap(), row[4].parse().unwrap());
    assert!(value >= bound);
}
