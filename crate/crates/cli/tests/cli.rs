use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fracrb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracrb")).args(args).output().expect("binary runs")
}

fn scratch(tag: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli").join(tag);
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn constants_succeed_and_write_summary() {
    let dir = scratch("constants");
    let out = fracrb(&["constants", "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_str(&read(&dir, "constants_summary.json")).unwrap();
    assert_eq!(summary["passed"], serde_json::Value::Bool(true));
    assert_eq!(summary["checks"].as_array().unwrap().len(), 24);
    let csv = read(&dir, "constants_table1.csv");
    let hash = summary["config_hash"].as_str().unwrap();
    assert!(csv.lines().next().unwrap().ends_with(",config_hash"));
    assert!(csv.lines().skip(1).all(|l| l.ends_with(hash)));
}

#[test]
fn configuration_errors_exit_with_3() {
    let dir = scratch("bad");
    let d = dir.to_str().unwrap();
    for args in [
        vec!["greedy", "--s", "2.5", "--out", d],
        vec!["frobnicate", "--out", d],
        vec!["convergence", "--example", "greedy-case-1", "--out", d],
        vec!["convergence", "--example", "ex3", "--levels", "4..6", "--reference-level", "5", "--out", d],
        vec!["greedy", "--no-such-flag"],
        vec![],
    ] {
        assert_eq!(fracrb(&args).status.code(), Some(3), "{args:?}");
    }
}

#[test]
fn failed_checks_exit_with_2() {
    // the rate band is not met for the unit reaction range
    let dir = scratch("cd");
    let out = fracrb(&["greedy", "--example", "constant-diffusion", "--s", "1.8", "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL s1.8_estimator_rate"));
}

#[test]
fn greedy_outputs_are_deterministic() {
    let (a, b) = (scratch("det-a"), scratch("det-b"));
    for dir in [&a, &b] {
        let out = fracrb(&["greedy", "--s", "1.5", "--n-max", "5", "--out", dir.to_str().unwrap()]);
        assert!(out.status.code() == Some(0) || out.status.code() == Some(2));
    }
    for name in ["greedy_trace_s1.5.csv", "greedy_greedy-case-1_trace.csv", "model_s1.5/basis.csv", "model_s1.5/selected.csv"] {
        assert_eq!(read(&a, name), read(&b, name), "{name}");
    }
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = scratch("file");
    fs::create_dir_all(&dir).unwrap();
    let file = dir.join("run.cfg");
    fs::write(&file, "# conditioning run\ncommand = conditioning\ns = 1.5\nlevels = 3..6\n").unwrap();
    let out = fracrb(&["--config", file.to_str().unwrap(), "--s", "1.8", "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let slopes = read(&dir, "conditioning_slopes.csv");
    assert!(slopes.lines().skip(1).all(|l| l.split(',').nth(1) == Some("1.8")), "{slopes}");
    assert_eq!(slopes.lines().count(), 4);
}
