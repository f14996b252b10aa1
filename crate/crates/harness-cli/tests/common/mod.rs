#![allow(dead_code)]

use std::path::PathBuf;

use bdi_kernel::kernel::{
    deliberate, run_cycle, AgentState, BeliefDelta, Command, Plan, Step, Trigger,
};
use bdi_kernel::message::{AgentId, Envelope, Performative};
use bdi_kernel::term::Atom;

pub fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn toy_agent() -> AgentState {
    let greet = Plan::new(
        "greet",
        Trigger::goal("greet"),
        vec![
            Step::Send(|ctx| {
                vec![Envelope::new(
                    ctx.agent.clone(),
                    AgentId::new("peer"),
                    Performative::Inform,
                    ctx.conversation(),
                    Atom::new("hello", vec![]),
                )]
            }),
            Step::UpdateBeliefs(|_| vec![BeliefDelta::Add(Atom::new("greeted", vec![]))]),
        ],
    );
    let clean = Plan::new(
        "clean",
        Trigger::goal("clean"),
        vec![
            Step::UpdateBeliefs(|_| vec![BeliefDelta::Add(Atom::new("swept", vec![]))]),
            Step::StoreCommand(|ctx| {
                Some(Command {
                    name: "save".into(),
                    args: vec![],
                    conversation: ctx.conversation(),
                })
            }),
            Step::EmitGoal(|_| vec![("greet".into(), vec![])]),
        ],
    )
    .when(|beliefs, _| beliefs.contains(&Atom::new("greeted", vec![])));
    let mut agent = AgentState::new("toy", vec![greet, clean]).unwrap();
    agent.adopt("clean", vec![]);
    agent.adopt("greet", vec![]);
    agent
}

fn list(items: Vec<String>) -> String {
    if items.is_empty() {
        "-".into()
    } else {
        items.join(",")
    }
}

/// One line per cycle in the golden file's format.
pub fn toy_trace(cycles: u64) -> Vec<String> {
    let mut agent = toy_agent();
    let mut out = Vec::new();
    for cycle in 0..cycles {
        let options = list(
            deliberate(&agent)
                .iter()
                .map(|(g, p)| format!("{}:{}", g.adoption_seq, p.name))
                .collect(),
        );
        let fx = run_cycle(&mut agent, vec![]).unwrap();
        let committed = list(
            fx.committed
                .iter()
                .map(|(s, p)| format!("{s}:{p}"))
                .collect(),
        );
        let executed = fx.executed.map_or("-".to_string(), |e| {
            format!(
                "{}:{}@{}:{}{}",
                e.goal_seq,
                e.plan,
                e.pc,
                e.kind,
                if e.completed { ":done" } else { "" }
            )
        });
        let goals = list(
            agent
                .goals
                .iter()
                .map(|g| format!("{}:{}", g.adoption_seq, g.name))
                .collect(),
        );
        let mut beliefs: Vec<String> = agent
            .beliefs
            .iter()
            .map(|b| {
                if b.args.is_empty() {
                    b.name.clone()
                } else {
                    b.to_string()
                }
            })
            .collect();
        beliefs.sort();
        out.push(format!(
            "{cycle}|{options}|{committed}|{executed}|{}|{}|{goals}|{}",
            fx.outbox.len(),
            fx.commands.len(),
            list(beliefs)
        ));
    }
    out
}

pub fn golden_lines(text: &str) -> Vec<String> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .map(String::from)
        .collect()
}

use harness_cli::config::{FaultFlag, RunConfig};
use harness_cli::run::{run_scenario, RunOptions, ScenarioReport};
use harness_cli::scenario::{parse_scenario, ScenarioCommand};

pub fn scenario(path: &str) -> Vec<ScenarioCommand> {
    let text = std::fs::read_to_string(crate_dir().join(path)).unwrap();
    parse_scenario(&text).unwrap()
}

pub fn golden_paths() -> Vec<PathBuf> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(crate_dir().join("scenarios"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "scn"))
        .collect();
    paths.sort();
    paths
}

pub fn mutation_config() -> RunConfig {
    let text =
        std::fs::read_to_string(crate_dir().join("scenarios/mutation/mutation.cfg")).unwrap();
    RunConfig::parse(&text).unwrap()
}

pub fn run_mutation(n: usize, fault: Option<FaultFlag>) -> ScenarioReport {
    let cmds = scenario(&format!("scenarios/mutation/p{n}.scn"));
    let opts = RunOptions::new(mutation_config())
        .with_fault(fault)
        .recording();
    run_scenario(&cmds, opts).unwrap()
}

/// A request/reply pair read straight off trace lines.
#[derive(Debug)]
pub struct Exchange {
    pub conversation: String,
    pub from: String,
    pub to: String,
    pub sent: u64,
    pub answered: Option<u64>,
}

/// Pair every request envelope with the first reply travelling back on the
/// same conversation. Works on raw lines; no library parsing involved.
pub fn exchanges(trace: &str) -> Vec<Exchange> {
    let mut out: Vec<Exchange> = Vec::new();
    for line in trace.lines().filter(|l| !l.starts_with('#')) {
        let f: Vec<&str> = line.splitn(8, '|').collect();
        if f[2] != "envelope" {
            continue;
        }
        let round: u64 = f[0].parse().unwrap();
        let (from, to, perf, conv) = (f[3], f[4], f[5], f[6]);
        if perf == "request" {
            out.push(Exchange {
                conversation: conv.into(),
                from: from.into(),
                to: to.into(),
                sent: round,
                answered: None,
            });
        } else if let Some(x) = out.iter_mut().find(|x| {
            x.answered.is_none() && x.conversation == conv && x.from == to && x.to == from
        }) {
            x.answered = Some(round);
        }
    }
    out
}
