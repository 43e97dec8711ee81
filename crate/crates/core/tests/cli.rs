use std::path::PathBuf;
use std::process::Command;

use trajexec::executor::Event;
use trajexec::harness::metrics::Metrics;

fn scenario(name: &str) -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "scenarios", name].iter().collect()
}

fn trajexec() -> Command {
    Command::new(env!("CARGO_BIN_EXE_trajexec"))
}

#[test]
fn writes_log_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let events = dir.path().join("events.log");
    let metrics = dir.path().join("metrics.csv");
    let status = trajexec()
        .args(["run", "--mode", "sync", "--scenario"])
        .arg(scenario("disjoint.json"))
        .arg("--events-out")
        .arg(&events)
        .arg("--metrics-out")
        .arg(&metrics)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    let log = std::fs::read_to_string(&events).unwrap();
    let parsed: Vec<Event> = log.lines().map(|l| Event::parse_line(l).unwrap()).collect();
    assert!(!parsed.is_empty());
    // the CSV is recomputable from the log alone
    let csv = std::fs::read_to_string(&metrics).unwrap();
    assert_eq!(csv, Metrics::from_events("sync", &parsed).to_csv().unwrap());
    assert!(csv.starts_with("mode,makespan_s,mean_wait_s,backlog_entries,"));
    assert!(csv.lines().nth(1).unwrap().starts_with("sync,5.01"));
}

#[test]
fn exit_code_reports_aborts() {
    let out = trajexec()
        .args(["run", "--scenario"])
        .arg(scenario("timeout.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("\tTIMEOUT_ABORT\t2\t"));
}

#[test]
fn overrides_reach_the_run() {
    // a coarser tick shows in the first admission time
    let out = trajexec()
        .args(["run", "--tick", "0.05", "--margin", "0.05", "--scenario"])
        .arg(scenario("crossing.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let first_admit = stdout
        .lines()
        .find(|l| l.contains("\tADMITTED\t"))
        .unwrap();
    assert!(first_admit.starts_with("0.050000\t"), "{first_admit}");
}

#[test]
fn bad_input_fails_cleanly() {
    let out = trajexec()
        .args(["run", "--scenario", "/nonexistent/scenario.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error:"));

    let out = trajexec()
        .args(["run", "--mode", "eventually", "--scenario"])
        .arg(scenario("crossing.json"))
        .output()
        .unwrap();
    assert!(!out.status.success());
}
