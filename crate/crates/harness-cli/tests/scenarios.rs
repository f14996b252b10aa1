mod common;

use std::collections::BTreeSet;

use agent_runtime::Scheduling;
use common::*;
use harness_cli::config::{FaultFlag, RunConfig};
use harness_cli::run::{run_scenario, Driver, RunOptions};
use harness_cli::scenario::{parse_scenario, ScenarioCommand, Verb};
use safety_monitor::{PropertyId, Status};

fn run_text(text: &str, opts: RunOptions) -> harness_cli::run::ScenarioReport {
    run_scenario(&parse_scenario(text).unwrap(), opts).unwrap()
}

#[test]
fn golden_suite_holds_and_every_request_is_answered() {
    let paths = golden_paths();
    assert!(paths.len() >= 8);
    let mut verbs = BTreeSet::new();
    for path in paths {
        let cmds = parse_scenario(&std::fs::read_to_string(&path).unwrap()).unwrap();
        verbs.extend(cmds.iter().map(|c| c.verb.as_str()));
        let report =
            run_scenario(&cmds, RunOptions::new(RunConfig::default()).recording()).unwrap();
        assert_eq!(
            report.exit_code(),
            0,
            "{}: {:?}",
            path.display(),
            report.expectation_failures
        );
        assert!(report
            .result
            .verdicts
            .iter()
            .all(|v| v.status == Status::Holds));
        let trace = report.result.trace.unwrap();
        let xs = exchanges(&trace);
        assert!(!xs.is_empty());
        for x in &xs {
            let answered = x.answered.unwrap_or_else(|| panic!("{x:?} unanswered"));
            assert!(answered - x.sent <= 10, "{x:?}");
        }
    }
    for verb in Verb::ALL {
        assert!(
            verbs.contains(verb.as_str()),
            "{} not covered",
            verb.as_str()
        );
    }
}

#[test]
fn golden_dump_satisfies_table_invariants() {
    let report = run_scenario(
        &scenario("scenarios/09_semester.scn"),
        RunOptions::default(),
    )
    .unwrap();
    let dump = &report.result.dump;
    let st_ids: Vec<&str> = dump
        .rows("students")
        .map(|r| r.get("st_id").unwrap())
        .collect();
    let unique: BTreeSet<&str> = st_ids.iter().copied().collect();
    assert_eq!(st_ids.len(), unique.len());
    assert_eq!(st_ids.len(), 4);
    // two programs of two semesters each
    assert_eq!(dump.rows("fees").count(), 4);
    for r in dump.rows("results") {
        let m = r.int("marks").unwrap();
        assert!((0..=100).contains(&m));
    }
}

#[test]
fn duplicate_registration_is_refused_and_expected() {
    let text = "OPEN_SESSION dept=CS
REGISTER_STUDENT st_id=111 name=Ali dept=CS
REGISTER_STUDENT st_id=111 name=Ali dept=CS
EXPECT_REFUSAL reason=\"Student Already Registerd\"
";
    let clean = run_text(text, RunOptions::default());
    assert_eq!(clean.exit_code(), 0);
    let injected = run_text(
        text,
        RunOptions::default().with_fault(Some("p1".parse().unwrap())),
    );
    assert_eq!(injected.exit_code(), 2);
    let p1 = &injected.result.verdicts[0];
    assert_eq!((p1.property, p1.status), (PropertyId::P1, Status::Violated));
    // the expectation also failed, but a violation decides the exit code
    assert_eq!(injected.expectation_failures.len(), 1);
}

#[test]
fn wrong_expectations_exit_one() {
    let accepted = run_text(
        "OPEN_SESSION dept=CS\nEXPECT_REFUSAL\n",
        RunOptions::default(),
    );
    assert_eq!(accepted.exit_code(), 1);
    let wrong_reason = run_text(
        "OPEN_SESSION dept=EE\nEXPECT_REFUSAL reason=busy\n",
        RunOptions::default(),
    );
    assert_eq!(wrong_reason.exit_code(), 1);
    assert!(wrong_reason.expectation_failures[0].contains("unauthorized access"));
}

#[test]
fn each_fault_trips_only_its_property() {
    for n in 1..=11 {
        let clean = run_mutation(n, None);
        assert_eq!(clean.exit_code(), 0, "p{n} clean");
        let fault: FaultFlag = format!("p{n}").parse().unwrap();
        let report = run_mutation(n, Some(fault));
        for v in &report.result.verdicts {
            let expected = if v.property == fault.property() {
                Status::Violated
            } else {
                Status::Holds
            };
            assert_eq!(v.status, expected, "p{n}: {}", v.to_line());
        }
    }
}

#[test]
fn mute_agent_breaks_liveness() {
    let cmds =
        parse_scenario("OPEN_SESSION dept=CS\nREGISTER_STUDENT st_id=1 name=A dept=CS\n").unwrap();
    let opts = RunOptions {
        mute: Some("SA".into()),
        ..RunOptions::default()
    };
    let report = run_scenario(&cmds, opts).unwrap();
    assert_eq!(report.exit_code(), 2);
    for v in &report.result.verdicts {
        let want = if v.property == PropertyId::P12 {
            Status::Violated
        } else {
            Status::Holds
        };
        assert_eq!(v.status, want, "{}", v.to_line());
    }
    assert!(report.result.outcomes[1].performative.is_none());
}

#[test]
fn capacity_lecture_and_marks_thresholds() {
    let setup = "OPEN_SESSION dept=CS
ADD_PROGRAM name=BSCS session=morning semesters=1 fee=1
ADD_CLASS program=1 semester=1 subject=S day=0 period=0
REGISTER_STUDENT st_id=1 name=A dept=CS
ADMIT student=1 program=1
";
    let mut driver = Driver::new(RunOptions::default());
    for c in parse_scenario(setup).unwrap() {
        assert!(driver.submit(&c).unwrap().unwrap().accepted());
    }
    let mut submit = |line: &str| {
        let c: Vec<ScenarioCommand> = parse_scenario(line).unwrap();
        driver.submit(&c[0]).unwrap().unwrap()
    };
    let exam = |term: &str, day: u32| {
        format!("SCHEDULE_EXAM term={term} class=1 subject=S date=2024-01-{day:02}")
    };
    submit("DELIVER_LECTURE class=1 subject=S count=15");
    assert_eq!(
        submit(&exam("mid", 1)).reason().as_deref(),
        Some("insufficient lectures")
    );
    submit("DELIVER_LECTURE class=1 subject=S");
    assert!(submit(&exam("mid", 2)).accepted());
    submit("DELIVER_LECTURE class=1 subject=S count=15");
    assert!(!submit(&exam("final", 3)).accepted());
    submit("DELIVER_LECTURE class=1 subject=S");
    assert!(submit(&exam("final", 4)).accepted());
    for (marks, ok) in [(-1, false), (101, false), (0, true), (100, true)] {
        let o = submit(&format!(
            "RECORD_RESULT student=1 class=1 subject=S marks={marks}"
        ));
        assert_eq!(o.accepted(), ok, "marks {marks}");
    }
}

#[test]
fn reruns_and_parallel_mode_hash_alike() {
    for path in golden_paths() {
        let cmds = parse_scenario(&std::fs::read_to_string(&path).unwrap()).unwrap();
        let hash = |s: Scheduling| {
            let opts = RunOptions {
                scheduling: s,
                ..RunOptions::default()
            };
            run_scenario(&cmds, opts).unwrap().result.trace_hash
        };
        let a = hash(Scheduling::Sequential);
        assert_eq!(a, hash(Scheduling::Sequential));
        assert_eq!(a, hash(Scheduling::Parallel), "{}", path.display());
    }
}

#[test]
fn seed_changes_only_the_header() {
    let cmds = scenario("scenarios/01_registration.scn");
    let run = |seed| {
        let config = RunConfig {
            seed,
            ..RunConfig::default()
        };
        run_scenario(&cmds, RunOptions::new(config).recording())
            .unwrap()
            .result
    };
    let (a, b) = (run(1), run(2));
    let body = |t: &str| -> Vec<String> {
        t.lines()
            .filter(|l| !l.starts_with('#'))
            .map(String::from)
            .collect()
    };
    assert_eq!(
        body(a.trace.as_ref().unwrap()),
        body(b.trace.as_ref().unwrap())
    );
    assert_ne!(a.trace_hash, b.trace_hash);
}
