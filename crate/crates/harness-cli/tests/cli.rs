mod common;

use std::process::{Command, Output};

use common::crate_dir;

fn ims(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ims"))
        .args(args)
        .current_dir(crate_dir())
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_exit_codes() {
    let ok = ims(&["run", "scenarios/01_registration.scn"]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(
        stdout(&ok)
            .lines()
            .filter(|l| l.contains("|holds|"))
            .count(),
        12
    );

    let bad = ims(&[
        "run",
        "scenarios/mutation/p1.scn",
        "--config",
        "scenarios/mutation/mutation.cfg",
        "--inject",
        "p1",
    ]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(stdout(&bad).contains("P1|violated|"));

    let dir = tempfile::tempdir().unwrap();
    let scn = dir.path().join("x.scn");
    std::fs::write(&scn, "OPEN_SESSION dept=CS\nFLY away=1\n").unwrap();
    let parse = ims(&["run", scn.to_str().unwrap()]);
    assert_eq!(parse.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&parse.stderr).contains("line 2"));

    std::fs::write(&scn, "OPEN_SESSION dept=CS\nEXPECT_REFUSAL\n").unwrap();
    assert_eq!(ims(&["run", scn.to_str().unwrap()]).status.code(), Some(1));

    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "cap = 0\n").unwrap();
    let code = ims(&[
        "run",
        "scenarios/01_registration.scn",
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(code.status.code(), Some(3));
    assert_eq!(ims(&["run", "nope.scn"]).status.code(), Some(3));
    assert_eq!(ims(&["run", "x", "--inject", "p12"]).status.code(), Some(3));
}

#[test]
fn recorded_trace_re_evaluates_offline() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let live = ims(&[
        "fuzz", "--seed", "4", "--events", "300", "--inject", "p9", "--out", out,
    ]);
    assert_eq!(live.status.code(), Some(2));
    let verdicts = std::fs::read_to_string(dir.path().join("verdicts.txt")).unwrap();
    let offline = ims(&["report", dir.path().join("trace.txt").to_str().unwrap()]);
    assert_eq!(offline.status.code(), Some(2));
    assert_eq!(stdout(&offline), verdicts);
}

#[test]
fn load_and_crash_commands() {
    let load = ims(&["load", "--clients", "11", "--cap", "10"]);
    assert_eq!(load.status.code(), Some(0));
    assert_eq!(stdout(&load), "clients = 11\ngranted = 10\nbusy = 1\n");

    let crash = ims(&[
        "replay-crash",
        "scenarios/09_semester.scn",
        "--at",
        "20",
        "--torn",
    ]);
    assert_eq!(crash.status.code(), Some(0));
    assert!(stdout(&crash).ends_with("equivalent\n"));
}

#[test]
fn fuzz_is_reproducible() {
    let a = stdout(&ims(&["fuzz", "--seed", "1", "--events", "100"]));
    let b = stdout(&ims(&["fuzz", "--seed", "1", "--events", "100"]));
    assert_eq!(a, b);
    assert!(a.contains("# trace_hash = "));
}
