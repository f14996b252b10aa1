//! The ten IMS agents as plan libraries, plus the store environment.
//!
//! Requests flow `GW -> specialist -> OA -> specialist -> GW`. Open and close
//! session requests go from GW straight to OA. OA is the only agent that
//! issues store commands; it learns each outcome as a `done` or `failed`
//! belief and turns it into exactly one reply.
//!
//! GW records every reply it receives as `reply(conversation, performative,
//! content)` so a driver can read outcomes back.

use std::fmt;

use agent_runtime::trace::TracePayload;
use agent_runtime::{Environment, Execution, Scheduling, World};
use bdi_kernel::kernel::{
    AgentState, BeliefBase, BeliefDelta, Command, Goal, Plan, Step, StepContext, Trigger,
};
use bdi_kernel::message::{AgentId, Envelope, Performative};
use bdi_kernel::term::{Atom, Term};
use ims_store::{RefusalKind, ReportKind, Store};

pub const GW: &str = "GW";
pub const SA: &str = "SA";
pub const TA: &str = "TA";
pub const ASA: &str = "ASA";
pub const CSA: &str = "CSA";
pub const DSA: &str = "DSA";
pub const FSA: &str = "FSA";
pub const RA: &str = "RA";
pub const RPA: &str = "RPA";
pub const OA: &str = "OA";

/// Registration order.
pub const ROSTER: [&str; 10] = [GW, SA, TA, ASA, CSA, DSA, FSA, RA, RPA, OA];

/// Gateway refusal when no session is open.
pub const NO_SESSION: &str = "no open session";

/// Where the gateway sends a request and which store command it becomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Route {
    pub verb: &'static str,
    pub agent: &'static str,
    pub command: &'static str,
}

const fn route(verb: &'static str, agent: &'static str, command: &'static str) -> Route {
    Route {
        verb,
        agent,
        command,
    }
}

pub const ROUTES: [Route; 12] = [
    route("open_session", OA, "open_session"),
    route("close_session", OA, "close_session"),
    route("register_student", SA, "add_student"),
    route("register_teacher", TA, "add_teacher"),
    route("admit", ASA, "admit"),
    route("add_program", FSA, "add_program"),
    route("add_class", CSA, "add_class"),
    route("assign_teacher", CSA, "assign_teacher"),
    route("deliver_lecture", CSA, "deliver_lecture"),
    route("schedule_exam", DSA, "schedule_exam"),
    route("record_result", RA, "record_result"),
    route("generate_report", RPA, "report_data"),
];

pub fn route_for_verb(verb: &str) -> Option<&'static Route> {
    ROUTES.iter().find(|r| r.verb == verb)
}

fn session_ids(beliefs: &BeliefBase) -> impl Iterator<Item = i64> + '_ {
    beliefs
        .query("session")
        .filter_map(|b| b.arg(0).and_then(Term::as_int))
}

// ---- gateway ----

fn gw_may_send(beliefs: &BeliefBase, goal: &Goal) -> bool {
    goal.name == "open_session" || session_ids(beliefs).next().is_some()
}

fn gw_no_session(beliefs: &BeliefBase, goal: &Goal) -> bool {
    !gw_may_send(beliefs, goal)
}

fn gw_forward(ctx: &StepContext<'_>) -> Vec<Envelope> {
    let Some(r) = route_for_verb(&ctx.goal.name) else {
        return vec![];
    };
    let mut args = ctx.params.to_vec();
    let command = if r.agent == OA { r.command } else { r.verb };
    if r.verb == "close_session" && args.is_empty() {
        args.extend(session_ids(ctx.beliefs).max().map(Term::Int));
    }
    vec![Envelope::new(
        ctx.agent.clone(),
        AgentId::new(r.agent),
        Performative::Request,
        ctx.conversation(),
        Atom::new(command, args),
    )]
}

fn gw_refuse_locally(ctx: &StepContext<'_>) -> Vec<BeliefDelta> {
    let content = Atom::new(ctx.goal.name.clone(), vec![Term::text(NO_SESSION)]);
    vec![BeliefDelta::Add(reply_belief(
        &ctx.conversation(),
        Performative::Refuse,
        &content,
    ))]
}

fn reply_belief(conversation: &str, performative: Performative, content: &Atom) -> Atom {
    Atom::new(
        "reply",
        vec![
            Term::text(conversation),
            Term::id(performative.as_str()),
            Term::Text(content.to_string()),
        ],
    )
}

fn gw_record(ctx: &StepContext<'_>) -> Vec<BeliefDelta> {
    let goal = ctx.goal;
    let (Some((perf, name)), Some(conv)) = (goal.message_parts(), goal.conversation()) else {
        return vec![];
    };
    let content = Atom::new(name, goal.content_args().to_vec());
    let mut out = vec![BeliefDelta::Add(reply_belief(conv, perf, &content))];
    if perf == Performative::Inform {
        if let Some(&Term::Int(sid)) = goal.content_args().first() {
            let session = Atom::new("session", vec![Term::Int(sid)]);
            match name {
                "open_session" => out.push(BeliefDelta::Add(session)),
                "close_session" => out.push(BeliefDelta::Remove(session)),
                _ => {}
            }
        }
    }
    out
}

pub fn gateway() -> AgentState {
    let mut plans = Vec::new();
    for r in &ROUTES {
        plans.push(
            Plan::new(
                format!("gw:{}", r.verb),
                Trigger::goal(r.verb),
                vec![Step::Send(gw_forward)],
            )
            .when(gw_may_send),
        );
        plans.push(
            Plan::new(
                format!("gw:{}:no-session", r.verb),
                Trigger::goal(r.verb),
                vec![Step::UpdateBeliefs(gw_refuse_locally)],
            )
            .when(gw_no_session),
        );
    }
    plans.push(Plan::new(
        "gw:reply",
        Trigger::Message {
            performative: None,
            content: None,
        },
        vec![Step::UpdateBeliefs(gw_record)],
    ));
    AgentState::new(GW, plans).expect("gateway plans are non-empty")
}

// ---- specialists ----

/// `pending(own conversation, requester, requester conversation, verb)`
fn sp_remember(ctx: &StepContext<'_>) -> Vec<BeliefDelta> {
    let goal = ctx.goal;
    let (Some((_, verb)), Some(sender), Some(conv)) =
        (goal.message_parts(), goal.sender(), goal.conversation())
    else {
        return vec![];
    };
    vec![BeliefDelta::Add(Atom::new(
        "pending",
        vec![
            Term::Text(ctx.conversation()),
            Term::id(sender.as_str()),
            Term::text(conv),
            Term::id(verb),
        ],
    ))]
}

fn sp_delegate(ctx: &StepContext<'_>) -> Vec<Envelope> {
    let Some((_, verb)) = ctx.goal.message_parts() else {
        return vec![];
    };
    let Some(r) = route_for_verb(verb).filter(|r| r.agent == ctx.agent.as_str()) else {
        return vec![];
    };
    vec![Envelope::new(
        ctx.agent.clone(),
        AgentId::new(OA),
        Performative::Request,
        ctx.conversation(),
        Atom::new(r.command, ctx.goal.content_args().to_vec()),
    )]
}

fn pending_for<'a>(beliefs: &'a BeliefBase, conv: &str) -> Option<&'a Atom> {
    beliefs
        .query("pending")
        .find(|b| b.arg(0).and_then(Term::as_str) == Some(conv))
}

fn sp_answer(ctx: &StepContext<'_>) -> Vec<Envelope> {
    let goal = ctx.goal;
    let (Some((perf, _)), Some(conv)) = (goal.message_parts(), goal.conversation()) else {
        return vec![];
    };
    let Some(p) = pending_for(ctx.beliefs, conv) else {
        return vec![];
    };
    let (Some(requester), Some(their_conv), Some(verb)) = (
        p.arg(1).and_then(Term::as_str),
        p.arg(2).and_then(Term::as_str),
        p.arg(3).and_then(Term::as_str),
    ) else {
        return vec![];
    };
    let content = if perf == Performative::Inform && verb == "generate_report" {
        if ctx
            .beliefs
            .contains(&Atom::new("fault", vec![Term::id("p11")]))
        {
            Atom::new("report", vec![])
        } else {
            build_report(goal.content_args())
        }
    } else {
        Atom::new(verb, goal.content_args().to_vec())
    };
    vec![Envelope::new(
        ctx.agent.clone(),
        AgentId::new(requester),
        perf,
        their_conv,
        content,
    )]
}

fn sp_forget(ctx: &StepContext<'_>) -> Vec<BeliefDelta> {
    ctx.goal
        .conversation()
        .and_then(|conv| pending_for(ctx.beliefs, conv))
        .map(|p| vec![BeliefDelta::Remove(p.clone())])
        .unwrap_or_default()
}

/// An agent that serves `verbs` by delegating each to OA.
pub fn specialist(id: &str) -> AgentState {
    let mut plans = Vec::new();
    for r in ROUTES.iter().filter(|r| r.agent == id) {
        plans.push(Plan::new(
            format!("{}:{}", id.to_lowercase(), r.verb),
            Trigger::message(Performative::Request, r.verb),
            vec![Step::UpdateBeliefs(sp_remember), Step::Send(sp_delegate)],
        ));
        for perf in [
            Performative::Inform,
            Performative::Refuse,
            Performative::Failure,
        ] {
            plans.push(Plan::new(
                format!("{}:{}:{}", id.to_lowercase(), r.command, perf),
                Trigger::message(perf, r.command),
                vec![Step::Send(sp_answer), Step::UpdateBeliefs(sp_forget)],
            ));
        }
    }
    AgentState::new(id, plans).expect("specialist plans are non-empty")
}

// ---- reports ----

/// Turn `report_data(kind, label, n, ...)` arguments into a report term.
fn build_report(args: &[Term]) -> Atom {
    let Some(kind) = args
        .first()
        .and_then(Term::as_str)
        .and_then(|k| k.parse::<ReportKind>().ok())
    else {
        return Atom::new("report", vec![]);
    };
    let pairs: Vec<(String, i64)> = args[1..]
        .chunks(2)
        .filter_map(|c| match c {
            [label, Term::Int(v)] => Some((label.plain(), *v)),
            _ => None,
        })
        .collect();
    let rows: Vec<ReportRow> = match kind {
        ReportKind::TeacherStudentRatio | ReportKind::LabStudentRatio => match pairs.as_slice() {
            [(a, num), (b, den)] => vec![ReportRow {
                label: format!("{a}:{b}"),
                value: ReportValue::Ratio {
                    num: *num,
                    den: *den,
                },
            }],
            _ => vec![],
        },
        _ => pairs
            .into_iter()
            .map(|(label, n)| ReportRow {
                label,
                value: ReportValue::Count(n),
            })
            .collect(),
    };
    Report {
        kind,
        rows,
        generated_round: 0,
    }
    .to_atom()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportValue {
    Count(i64),
    /// Shown as `num/den`, or `undefined` when either side is zero.
    Ratio {
        num: i64,
        den: i64,
    },
}

impl fmt::Display for ReportValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReportValue::Count(n) => write!(f, "{n}"),
            ReportValue::Ratio { num, den } if *num == 0 || *den == 0 => f.write_str("undefined"),
            ReportValue::Ratio { num, den } => write!(f, "{num}/{den}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportRow {
    pub label: String,
    pub value: ReportValue,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub kind: ReportKind,
    pub rows: Vec<ReportRow>,
    pub generated_round: u64,
}

impl Report {
    pub fn to_atom(&self) -> Atom {
        let mut args = vec![Term::id(self.kind.as_str())];
        for row in &self.rows {
            args.push(Term::text(row.label.clone()));
            args.push(match row.value {
                ReportValue::Count(n) => Term::Int(n),
                v => Term::Text(v.to_string()),
            });
        }
        Atom::new("report", args)
    }

    /// Inverse of [`Report::to_atom`]. `None` for anything that is not a
    /// complete report.
    pub fn from_atom(atom: &Atom, generated_round: u64) -> Option<Report> {
        if atom.name != "report" {
            return None;
        }
        let kind: ReportKind = atom.args.first()?.as_str()?.parse().ok()?;
        let rest = &atom.args[1..];
        if !rest.len().is_multiple_of(2) {
            return None;
        }
        let rows = rest
            .chunks(2)
            .map(|c| {
                let label = c[0].as_str()?.to_string();
                let value = match &c[1] {
                    Term::Int(n) => ReportValue::Count(*n),
                    t => {
                        let s = t.as_str()?;
                        if s == "undefined" {
                            ReportValue::Ratio { num: 0, den: 0 }
                        } else {
                            let (n, d) = s.split_once('/')?;
                            ReportValue::Ratio {
                                num: n.parse().ok()?,
                                den: d.parse().ok()?,
                            }
                        }
                    }
                };
                Some(ReportRow { label, value })
            })
            .collect::<Option<Vec<_>>>()?;
        Some(Report {
            kind,
            rows,
            generated_round,
        })
    }

    /// `kind|label|value` lines.
    pub fn lines(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| format!("{}|{}|{}", self.kind, r.label, r.value))
            .collect()
    }
}

// ---- orchestrator ----

fn oa_command(ctx: &StepContext<'_>) -> Option<Command> {
    let (_, name) = ctx.goal.message_parts()?;
    Some(Command {
        name: name.to_string(),
        args: ctx.goal.content_args().to_vec(),
        conversation: ctx.goal.conversation()?.to_string(),
    })
}

fn outcome_for<'a>(beliefs: &'a BeliefBase, conv: &str) -> Option<&'a Atom> {
    let is_conv = |b: &&Atom| b.arg(0).and_then(Term::as_str) == Some(conv);
    beliefs
        .query("done")
        .find(is_conv)
        .or_else(|| beliefs.query("failed").find(is_conv))
}

fn oa_reply(ctx: &StepContext<'_>) -> Vec<Envelope> {
    let goal = ctx.goal;
    let (Some((_, name)), Some(sender), Some(conv)) =
        (goal.message_parts(), goal.sender(), goal.conversation())
    else {
        return vec![];
    };
    let (perf, content) = match outcome_for(ctx.beliefs, conv) {
        Some(b) if b.name == "done" => {
            let parsed = b
                .arg(1)
                .and_then(Term::as_str)
                .and_then(|s| s.parse::<Atom>().ok());
            match parsed {
                Some(atom) => (Performative::Inform, atom),
                None => (
                    Performative::Failure,
                    Atom::new(name, vec![Term::text("unreadable store reply")]),
                ),
            }
        }
        Some(b) => {
            let perf = match b.arg(1).and_then(Term::as_str) {
                Some("refuse") => Performative::Refuse,
                _ => Performative::Failure,
            };
            let reason = b.arg(2).cloned().unwrap_or_else(|| Term::text(""));
            (perf, Atom::new(name, vec![reason]))
        }
        None => (
            Performative::Failure,
            Atom::new(name, vec![Term::text("no store outcome")]),
        ),
    };
    vec![Envelope::new(
        ctx.agent.clone(),
        sender,
        perf,
        conv,
        content,
    )]
}

fn oa_forget(ctx: &StepContext<'_>) -> Vec<BeliefDelta> {
    ctx.goal
        .conversation()
        .and_then(|conv| outcome_for(ctx.beliefs, conv))
        .map(|b| vec![BeliefDelta::Remove(b.clone())])
        .unwrap_or_default()
}

pub fn orchestrator() -> AgentState {
    AgentState::new(
        OA,
        vec![Plan::new(
            "oa:handle",
            Trigger::Message {
                performative: Some(Performative::Request),
                content: None,
            },
            vec![
                Step::StoreCommand(oa_command),
                Step::Send(oa_reply),
                Step::UpdateBeliefs(oa_forget),
            ],
        )],
    )
    .expect("orchestrator plans are non-empty")
}

fn ignore(_: &StepContext<'_>) -> Vec<BeliefDelta> {
    Vec::new()
}

/// An agent that accepts every request and never answers.
pub fn mute(id: &str) -> AgentState {
    AgentState::new(
        id,
        vec![Plan::new(
            "mute",
            Trigger::Message {
                performative: None,
                content: None,
            },
            vec![Step::UpdateBeliefs(ignore)],
        )],
    )
    .expect("mute plan is non-empty")
}

// ---- environment and world ----

/// The store as seen by OA.
#[derive(Debug, Clone)]
pub struct ImsEnvironment {
    pub store: Store,
}

impl Environment for ImsEnvironment {
    fn execute(&mut self, agent: &AgentId, cmd: &Command) -> Execution {
        let conv = Term::text(cmd.conversation.clone());
        match self.store.execute(cmd) {
            Ok(reply) => Execution {
                beliefs: vec![BeliefDelta::Add(Atom::new(
                    "done",
                    vec![conv, Term::Text(reply.content.to_string())],
                ))],
                trace: reply
                    .event
                    .map(|event| TracePayload::Domain {
                        agent: agent.clone(),
                        event,
                    })
                    .into_iter()
                    .collect(),
            },
            Err(refusal) => {
                let kind = match refusal.kind {
                    RefusalKind::Refuse => "refuse",
                    RefusalKind::Failure => "failure",
                };
                Execution {
                    beliefs: vec![BeliefDelta::Add(Atom::new(
                        "failed",
                        vec![conv, Term::id(kind), Term::text(refusal.reason.clone())],
                    ))],
                    trace: vec![TracePayload::Refusal {
                        agent: agent.clone(),
                        conversation: cmd.conversation.clone(),
                        command: cmd.name.clone(),
                        kind: refusal.kind,
                        reason: refusal.reason,
                    }],
                }
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct WorldOptions {
    pub seed: u64,
    pub scheduling: Scheduling,
    /// Recovery epoch; fresh worlds use 0.
    pub epoch: u64,
    /// First round and trace seq, for a world rebuilt mid-run.
    pub round: u64,
    pub next_seq: u64,
    /// RPA answers every report request with an empty `report()`.
    pub null_reports: bool,
    /// Replace this agent with one that never replies.
    pub mute: Option<String>,
}

/// The ten agents around `store`. GW starts out believing in every session
/// the store has open.
pub fn build_world(store: Store, opts: &WorldOptions) -> World<ImsEnvironment> {
    let sessions: Vec<i64> = store.open_sessions().map(|(id, _)| id).collect();
    let mut world = World::new(ImsEnvironment { store }, opts.seed)
        .with_env_owner(OA)
        .with_scheduling(opts.scheduling)
        .resume_at(opts.round, opts.next_seq);
    for id in ROSTER {
        let mut agent = if opts.mute.as_deref() == Some(id) {
            mute(id)
        } else {
            match id {
                GW => gateway(),
                OA => orchestrator(),
                _ => specialist(id),
            }
        };
        agent.epoch = opts.epoch;
        if id == GW {
            let deltas: Vec<_> = sessions
                .iter()
                .map(|&s| BeliefDelta::Add(Atom::new("session", vec![Term::Int(s)])))
                .collect();
            agent.perceive(&deltas).expect("session beliefs are unary");
        }
        if id == RPA && opts.null_reports {
            agent
                .perceive(&[BeliefDelta::Add(Atom::new("fault", vec![Term::id("p11")]))])
                .expect("fault belief is unary");
        }
        world
            .register_agent(agent)
            .expect("roster ids are distinct");
    }
    world
}

#[cfg(test)]
mod tests {
    use super::*;
    use ims_store::StoreConfig;

    #[test]
    fn roster_has_ten_distinct_agents() {
        let w = build_world(Store::new(StoreConfig::default()), &WorldOptions::default());
        let ids: Vec<_> = w.agent_ids().map(|a| a.as_str().to_string()).collect();
        assert_eq!(ids, ROSTER);
    }

    #[test]
    fn every_specialist_verb_routes_to_its_agent() {
        for r in &ROUTES {
            if r.agent == OA {
                continue;
            }
            let agent = specialist(r.agent);
            let goal = Goal {
                name: format!("request:{}", r.verb),
                params: vec![],
                adoption_seq: 0,
            };
            assert!(agent.plan_library.iter().any(|p| p.trigger.matches(&goal)));
        }
    }

    #[test]
    fn ratio_rows() {
        let r = |num, den| ReportValue::Ratio { num, den }.to_string();
        assert_eq!(r(3, 60), "3/60");
        assert_eq!(r(0, 60), "undefined");
        assert_eq!(r(3, 0), "undefined");
    }

    #[test]
    fn report_atom_round_trip() {
        let rep = Report {
            kind: ReportKind::AdmissionsPerYear,
            rows: vec![ReportRow {
                label: "year 1".into(),
                value: ReportValue::Count(2),
            }],
            generated_round: 4,
        };
        assert_eq!(Report::from_atom(&rep.to_atom(), 4), Some(rep.clone()));
        assert_eq!(rep.lines(), ["admissions_per_year|year 1|2"]);
        assert_eq!(Report::from_atom(&Atom::new("report", vec![]), 0), None);
    }

    #[test]
    fn report_built_from_store_data() {
        let data = [
            Term::id("teacher_student_ratio"),
            Term::text("teachers"),
            Term::Int(3),
            Term::text("students"),
            Term::Int(60),
        ];
        let rep = Report::from_atom(&build_report(&data), 0).unwrap();
        assert_eq!(
            rep.lines(),
            ["teacher_student_ratio|teachers:students|3/60"]
        );
        let empty =
            Report::from_atom(&build_report(&[Term::id("admissions_per_year")]), 0).unwrap();
        assert!(empty.rows.is_empty());
    }
}
