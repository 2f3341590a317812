//! Runs the `entrecover` binary end to end.

use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_entrecover"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn tmp() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

#[test]
fn help_and_version_exit_zero() {
    let d = tmp();
    assert_eq!(run(&["--help"], d.path()).status.code(), Some(0));
    assert_eq!(run(&["sweep", "--help"], d.path()).status.code(), Some(0));
    assert_eq!(run(&["--version"], d.path()).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    let d = tmp();
    for args in [
        vec![],
        vec!["frobnicate"],
        vec!["sweep", "--model", "three-way"],
        vec!["sweep", "--damping", "1.5"],
        vec!["sweep", "--damping-range", "0.6:0.2:0.1"],
        vec!["sweep", "--damping", "0.2", "--damping-range", "0:1:0.1"],
        vec!["optimize", "--damping", "-0.1"],
        vec!["optimize"],
        vec!["optimize", "--damping", "0.3", "--reversing", "grid"],
        vec!["validate", "--trials", "1000"],
        vec!["nla", "--damping", "1"],
    ] {
        let o = run(&args, d.path());
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn sweep_writes_csv() {
    let d = tmp();
    let o = run(&["sweep", "--model", "two-way", "--damping-range", "0:1:0.01", "--out", "s.csv"], d.path());
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(d.path().join("s.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("D,R,concurrence_unrecovered,concurrence_recovered,P,B,Q"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 101);
    assert!(rows[0].starts_with("0,0,1,1,1,0.25,4"));
    assert!(rows[100].ends_with(",inf"), "{}", rows[100]);
}

#[test]
fn empty_range_gives_one_row() {
    let d = tmp();
    let o = run(&["sweep", "--damping-range", "0.4:0.4:0.1"], d.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 2);
}

#[test]
fn optimize_reports_headline_values() {
    let d = tmp();
    let o = run(&["optimize", "--model", "two-way", "--policy", "phi", "--damping", "0.52"], d.path());
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("R       0.774275"), "{text}");
    assert!(text.contains("C       0.470259"));
    assert!(text.contains("Q       9.4577"));
    let o = run(&["optimize", "--model", "one-way", "--policy", "psi", "--damping", "0.62", "--reversing", "0.9", "--out", "o.csv"], d.path());
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(d.path().join("o.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("0.62,0.9,"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let d = tmp();
    std::fs::write(d.path().join("run.conf"), "# defaults\nmodel = single\ndamping-range = 0:0.5:0.25\n").unwrap();
    let from_cfg = stdout(&run(&["sweep", "--config", "run.conf"], d.path()));
    assert_eq!(from_cfg.lines().count(), 4);
    assert!(from_cfg.lines().nth(3).unwrap().starts_with("0.5,0.666666666667,0.707106781187,0.816496580928"));
    let overridden = stdout(&run(&["sweep", "--config", "run.conf", "--damping", "0.5", "--model", "two-way"], d.path()));
    assert_eq!(overridden.lines().count(), 2);
    assert!(overridden.lines().nth(1).unwrap().starts_with("0.5,0.7"));
}

#[test]
fn bad_config_is_a_usage_error_and_missing_config_an_io_error() {
    let d = tmp();
    std::fs::write(d.path().join("bad.conf"), "colour = blue\n").unwrap();
    assert_eq!(run(&["sweep", "--config", "bad.conf"], d.path()).status.code(), Some(1));
    assert_eq!(run(&["sweep", "--config", "absent.conf"], d.path()).status.code(), Some(3));
}

#[test]
fn unwritable_output_exits_three() {
    let d = tmp();
    let o = run(&["sweep", "--damping", "0.1", "--out", "no/such/dir/x.csv"], d.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no/such/dir/x.csv"));
}

#[test]
fn validate_passes_and_negative_control_fails() {
    let d = tmp();
    let ok = run(&["validate", "--trials", "10000", "--seed", "3"], d.path());
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    assert!(stdout(&ok).lines().last().unwrap().starts_with("# PASS"));
    let bad = run(&["validate", "--trials", "10000", "--seed", "3", "--bias", "0.05"], d.path());
    assert_eq!(bad.status.code(), Some(2));
    assert!(stdout(&bad).contains("FAIL"));
}

#[test]
fn nla_table_has_gain_column() {
    let d = tmp();
    let o = run(&["nla", "--damping-range", "0:0.9:0.45"], d.path());
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("D,R,eta,gain,ratio,herald_prob,concurrence_recovered"));
    assert_eq!(text.lines().nth(1), Some("0,0,0.5,1,1,0.25,1"));
}
