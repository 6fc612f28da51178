use std::path::PathBuf;
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../../scenarios/{name}.scn"))
}

fn salvo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_salvo"))
        .args(args)
        .env_remove("SALVO_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn value<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.split_whitespace()
        .find_map(|kv| kv.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
}

#[test]
fn run_writes_outputs_and_reports_key_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("case1");
    let o = salvo(&["run", scenario("case1").to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{o:?}");
    let s = stdout(&o);
    assert_eq!(value(&s, "status"), Some("complete"));
    let tf: f64 = value(&s, "t_f").unwrap().parse().unwrap();
    assert!((tf - 5.7054).abs() < 2e-3);
    assert_eq!(value(&s, "monitors_failed"), Some("0"));
    for f in ["trajectory.csv", "events.csv", "summary.json"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
}

#[test]
fn run_honours_out_dir_variable() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_salvo"))
        .args(["run", scenario("single").to_str().unwrap()])
        .env("SALVO_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{o:?}");
    assert!(dir.path().join("summary.json").is_file());
}

#[test]
fn strict_run_exits_two_on_monitor_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = salvo(&[
        "run",
        scenario("broken_delta").to_str().unwrap(),
        "-o",
        dir.path().to_str().unwrap(),
        "--strict",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("simultaneity"), "{err}");
}

#[test]
fn predict_names_leader_and_bounds() {
    let o = salvo(&["predict", scenario("case1").to_str().unwrap()]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert_eq!(value(&s, "leader"), Some("4"));
    assert_eq!(value(&s, "leader_reachable"), Some("true"));
    let tf: f64 = value(&s, "t_f").unwrap().parse().unwrap();
    assert!((tf - 5.705418).abs() < 1e-5);
    assert!(value(&s, "delta_bound_min").is_some());
}

#[test]
fn validate_flags_oversized_window() {
    let o = salvo(&["validate", scenario("broken_delta").to_str().unwrap()]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("check=min-ttilde-bound ok=false"), "{s}");
    assert_eq!(value(&s, "violations"), Some("1"));
    let strict = salvo(&["validate", scenario("broken_delta").to_str().unwrap(), "--strict"]);
    assert_eq!(strict.status.code(), Some(2));
}

#[test]
fn validate_accepts_node_addition() {
    let o = salvo(&["validate", scenario("case3").to_str().unwrap(), "--strict"]);
    assert!(o.status.success(), "{o:?}");
    assert_eq!(value(&stdout(&o), "violations"), Some("0"));
}

#[test]
fn invariants_lists_every_monitor() {
    let o = salvo(&["invariants", scenario("case1_complete").to_str().unwrap(), "--strict"]);
    assert!(o.status.success(), "{o:?}");
    let s = stdout(&o);
    assert_eq!(s.lines().filter(|l| l.starts_with("monitor=")).count(), 10);
    assert!(s.contains("monitor=switch_count status=pass"));
    let raw = salvo(&["invariants", scenario("omega_raw").to_str().unwrap(), "--strict"]);
    assert_eq!(raw.status.code(), Some(2));
    assert!(stdout(&raw).contains("monitor=omega_region status=fail"));
}

#[test]
fn sweep_prints_one_row_per_value() {
    let o = salvo(&[
        "sweep",
        scenario("single").to_str().unwrap(),
        "--param",
        "capture-radius",
        "--range",
        "0.5,1,2",
    ]);
    assert!(o.status.success(), "{o:?}");
    let s = stdout(&o);
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines[0], "param,value,status,t_f,spread,monitors_passed,monitors_failed");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("capture-radius,0.5,complete,"));
}

#[test]
fn usage_errors_exit_one() {
    let path = scenario("single");
    let p = path.to_str().unwrap();
    for args in [
        vec!["run", "--bogus", p],
        vec!["sweep", p, "--param", "speed", "--range", "1"],
        vec!["sweep", p, "--param", "dt", "--range", ""],
        vec!["sweep", p, "--param", "dt"],
        vec!["frobnicate"],
    ] {
        let o = salvo(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn bad_inputs_exit_one_with_diagnostic() {
    let o = salvo(&["predict", "/nonexistent/file.scn"]);
    assert_eq!(o.status.code(), Some(1));
    let invalid = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios/invalid/duplicate_id.scn");
    let o = salvo(&["run", invalid.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("duplicate pursuer id"));
    let o = salvo(&["run", scenario("single").to_str().unwrap(), "--dt", "-1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    assert!(salvo(&["--help"]).status.success());
}
