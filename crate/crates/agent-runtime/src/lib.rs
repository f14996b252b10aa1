//! Agent registry, mailboxes and the round-based scheduler.
//!
//! Every round takes a snapshot of each mailbox, steps every agent once in
//! registration order, then routes everything that was sent. An envelope
//! sent in round `r` is therefore first seen in round `r + 1`.
//!
//! The world owns one [`Environment`] (the store) and names the single agent
//! allowed to issue commands against it.

pub mod trace;

use std::collections::{BTreeMap, VecDeque};

use rayon::prelude::*;
use thiserror::Error;

use crate::trace::{TraceEvent, TracePayload};
use bdi_kernel::kernel::{self, AgentState, BeliefDelta, Command, CycleEffects, KernelError};
use bdi_kernel::message::{AgentId, Envelope, Performative};
use bdi_kernel::term::{Atom, Term};
use ims_store::RefusalKind;

/// Reason recorded when a non-owner issues a command.
pub const ACCESS_DENIED: &str = "store access denied";

/// Outcome of one command against the environment.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Execution {
    /// Belief changes for the issuing agent, visible from its next cycle.
    pub beliefs: Vec<BeliefDelta>,
    pub trace: Vec<TracePayload>,
}

pub trait Environment {
    fn execute(&mut self, agent: &AgentId, cmd: &Command) -> Execution;
}

/// An environment that accepts nothing.
impl Environment for () {
    fn execute(&mut self, agent: &AgentId, cmd: &Command) -> Execution {
        denied(agent, cmd)
    }
}

fn denied(agent: &AgentId, cmd: &Command) -> Execution {
    Execution {
        beliefs: vec![BeliefDelta::Add(Atom::new(
            "failed",
            vec![
                Term::Text(cmd.conversation.clone()),
                Term::id("failure"),
                Term::text(ACCESS_DENIED),
            ],
        ))],
        trace: vec![TracePayload::Refusal {
            agent: agent.clone(),
            conversation: cmd.conversation.clone(),
            command: cmd.name.clone(),
            kind: RefusalKind::Failure,
            reason: ACCESS_DENIED.into(),
        }],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheduling {
    #[default]
    Sequential,
    /// Agents of a round are stepped on a thread pool. Commands and routing
    /// still happen in registration order, so traces are identical.
    Parallel,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuntimeError {
    #[error("agent {0} is already registered")]
    DuplicateAgent(AgentId),
    #[error("unknown agent {0}")]
    UnknownAgent(AgentId),
    #[error("max_rounds must be at least 1")]
    ZeroBound,
    #[error("agent {agent}: {error}")]
    Kernel { agent: AgentId, error: KernelError },
}

/// Routing counters. `routed == delivered + undeliverable` always holds;
/// `notices` counts the failure envelopes generated for undeliverable ones.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RouteStats {
    pub routed: u64,
    pub delivered: u64,
    pub undeliverable: u64,
    pub notices: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    pub rounds_used: u64,
    /// False when `max_rounds` was reached with work still pending.
    pub quiescent: bool,
    pub events: Vec<TraceEvent>,
}

#[derive(Debug, Clone)]
pub struct World<E> {
    agents: Vec<AgentState>,
    index: BTreeMap<AgentId, usize>,
    mailboxes: Vec<VecDeque<Envelope>>,
    round: u64,
    rng_seed: u64,
    next_seq: u64,
    env: E,
    env_owner: Option<AgentId>,
    scheduling: Scheduling,
    stats: RouteStats,
}

impl<E: Environment + Send> World<E> {
    pub fn new(env: E, rng_seed: u64) -> Self {
        World {
            agents: Vec::new(),
            index: BTreeMap::new(),
            mailboxes: Vec::new(),
            round: 0,
            rng_seed,
            next_seq: 0,
            env,
            env_owner: None,
            scheduling: Scheduling::Sequential,
            stats: RouteStats::default(),
        }
    }

    /// Only `owner` may issue commands; everyone else is refused.
    pub fn with_env_owner(mut self, owner: impl Into<AgentId>) -> Self {
        self.env_owner = Some(owner.into());
        self
    }

    pub fn with_scheduling(mut self, scheduling: Scheduling) -> Self {
        self.scheduling = scheduling;
        self
    }

    /// Continue sequence numbers and rounds from an earlier world.
    pub fn resume_at(mut self, round: u64, next_seq: u64) -> Self {
        self.round = round;
        self.next_seq = next_seq;
        self
    }

    pub fn register_agent(&mut self, state: AgentState) -> Result<(), RuntimeError> {
        if self.index.contains_key(&state.id) {
            return Err(RuntimeError::DuplicateAgent(state.id));
        }
        self.index.insert(state.id.clone(), self.agents.len());
        self.agents.push(state);
        self.mailboxes.push(VecDeque::new());
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn agent_ids(&self) -> impl Iterator<Item = &AgentId> {
        self.agents.iter().map(|a| &a.id)
    }

    pub fn agent(&self, id: &AgentId) -> Option<&AgentState> {
        self.index.get(id).map(|&i| &self.agents[i])
    }

    pub fn agent_mut(&mut self, id: &AgentId) -> Option<&mut AgentState> {
        self.index.get(id).map(|&i| &mut self.agents[i])
    }

    pub fn mailbox(&self, id: &AgentId) -> Option<&VecDeque<Envelope>> {
        self.index.get(id).map(|&i| &self.mailboxes[i])
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    /// Sequence number the next trace event will carry.
    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    pub fn stats(&self) -> RouteStats {
        self.stats
    }

    pub fn env(&self) -> &E {
        &self.env
    }

    pub fn env_mut(&mut self) -> &mut E {
        &mut self.env
    }

    pub fn into_env(self) -> E {
        self.env
    }

    /// Adopt a goal in `agent` and return its adoption sequence number.
    pub fn post_goal(
        &mut self,
        agent: &AgentId,
        name: &str,
        params: Vec<Term>,
    ) -> Result<u64, RuntimeError> {
        let state = self
            .agent_mut(agent)
            .ok_or_else(|| RuntimeError::UnknownAgent(agent.clone()))?;
        Ok(state.adopt(name, params))
    }

    /// Append a payload to the trace at the current round.
    pub fn emit(&mut self, payload: TracePayload) -> TraceEvent {
        let ev = TraceEvent {
            seq: self.next_seq,
            round: self.round,
            payload,
        };
        self.next_seq += 1;
        ev
    }

    /// Deliver envelopes in list order. An envelope for an unknown receiver
    /// is answered with a failure envelope from that receiver id.
    pub fn route(&mut self, envelopes: Vec<Envelope>) -> Vec<TraceEvent> {
        let mut events = Vec::with_capacity(envelopes.len());
        for mut env in envelopes {
            env.sent_round = self.round;
            self.stats.routed += 1;
            events.push(self.emit(TracePayload::Envelope(env.clone())));
            match self.index.get(&env.receiver) {
                Some(&i) => {
                    self.mailboxes[i].push_back(env);
                    self.stats.delivered += 1;
                }
                None => {
                    self.stats.undeliverable += 1;
                    let notice = Envelope {
                        sender: env.receiver.clone(),
                        receiver: env.sender.clone(),
                        performative: Performative::Failure,
                        conversation: env.conversation.clone(),
                        content: Atom::new(
                            env.content.name.clone(),
                            vec![Term::text(format!("unknown receiver {}", env.receiver))],
                        ),
                        sent_round: self.round,
                    };
                    if let Some(&i) = self.index.get(&notice.receiver) {
                        self.stats.notices += 1;
                        events.push(self.emit(TracePayload::Envelope(notice.clone())));
                        self.mailboxes[i].push_back(notice);
                    }
                }
            }
        }
        events
    }

    /// Step every agent once, then route what was sent.
    pub fn run_round(&mut self) -> Result<Vec<TraceEvent>, RuntimeError> {
        let inboxes: Vec<Vec<Envelope>> = self
            .mailboxes
            .iter_mut()
            .map(|m| m.drain(..).collect())
            .collect();
        let cycle = |state: &mut AgentState, inbox: Vec<Envelope>| {
            if inbox.is_empty() && state.is_idle() {
                return Ok(CycleEffects::default());
            }
            kernel::run_cycle(state, inbox).map_err(|error| RuntimeError::Kernel {
                agent: state.id.clone(),
                error,
            })
        };
        let effects: Vec<Result<CycleEffects, RuntimeError>> = match self.scheduling {
            Scheduling::Sequential => self
                .agents
                .iter_mut()
                .zip(inboxes)
                .map(|(s, inbox)| cycle(s, inbox))
                .collect(),
            Scheduling::Parallel => self
                .agents
                .par_iter_mut()
                .zip(inboxes)
                .map(|(s, inbox)| cycle(s, inbox))
                .collect(),
        };

        let mut events = Vec::new();
        let mut outgoing = Vec::new();
        for (i, fx) in effects.into_iter().enumerate() {
            let fx = fx?;
            for cmd in &fx.commands {
                let id = self.agents[i].id.clone();
                let exec = if self.env_owner.as_ref() == Some(&id) {
                    self.env.execute(&id, cmd)
                } else {
                    denied(&id, cmd)
                };
                self.agents[i]
                    .perceive(&exec.beliefs)
                    .map_err(|error| RuntimeError::Kernel {
                        agent: id.clone(),
                        error,
                    })?;
                for payload in exec.trace {
                    events.push(self.emit(payload));
                }
            }
            outgoing.extend(fx.outbox);
        }
        events.extend(self.route(outgoing));
        self.round += 1;
        Ok(events)
    }

    /// No mail in flight, no live intention, and no goal with an applicable
    /// plan waiting to be committed.
    pub fn is_quiescent(&self) -> bool {
        self.mailboxes.iter().all(VecDeque::is_empty)
            && self.agents.iter().all(|a| {
                a.intentions.is_empty() && (a.goals.is_empty() || kernel::deliberate(a).is_empty())
            })
    }

    pub fn run_until_quiescent(&mut self, max_rounds: u64) -> Result<RunOutcome, RuntimeError> {
        if max_rounds == 0 {
            return Err(RuntimeError::ZeroBound);
        }
        let mut events = Vec::new();
        let mut rounds_used = 0;
        while !self.is_quiescent() {
            if rounds_used == max_rounds {
                return Ok(RunOutcome {
                    rounds_used,
                    quiescent: false,
                    events,
                });
            }
            events.extend(self.run_round()?);
            rounds_used += 1;
        }
        Ok(RunOutcome {
            rounds_used,
            quiescent: true,
            events,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use bdi_kernel::kernel::{Plan, Step, StepContext, Trigger};

    fn reply_inform(ctx: &StepContext<'_>) -> Vec<Envelope> {
        vec![Envelope::new(
            ctx.agent.clone(),
            ctx.goal.sender().unwrap(),
            Performative::Inform,
            ctx.goal.conversation().unwrap(),
            Atom::new("pong", vec![]),
        )]
    }

    fn echo() -> AgentState {
        AgentState::new(
            "ECHO",
            vec![Plan::new(
                "echo",
                Trigger::message(Performative::Request, "ping"),
                vec![Step::Send(reply_inform)],
            )],
        )
        .unwrap()
    }

    fn sink(id: &str) -> AgentState {
        AgentState::new(id, vec![]).unwrap()
    }

    fn ping(from: &str, to: &str, conv: &str) -> Envelope {
        Envelope::new(
            from.into(),
            to.into(),
            Performative::Request,
            conv,
            Atom::new("ping", vec![]),
        )
    }

    #[test]
    fn registration() {
        let mut w = World::new((), 0);
        w.register_agent(sink("SA")).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(
            w.register_agent(sink("SA")),
            Err(RuntimeError::DuplicateAgent("SA".into()))
        );
        for id in ["GW", "TA", "ASA", "CSA", "DSA", "FSA", "RA", "RPA", "OA"] {
            w.register_agent(sink(id)).unwrap();
        }
        assert_eq!(w.len(), 10);
    }

    #[test]
    fn route_is_fifo_and_traced() {
        let mut w = World::new((), 0);
        w.register_agent(sink("A")).unwrap();
        w.register_agent(sink("B")).unwrap();
        assert!(w.route(vec![]).is_empty());
        let ev = w.route(vec![ping("A", "B", "c1"), ping("A", "B", "c2")]);
        assert_eq!(ev.len(), 2);
        assert_eq!((ev[0].seq, ev[1].seq), (0, 1));
        let convs: Vec<_> = w
            .mailbox(&"B".into())
            .unwrap()
            .iter()
            .map(|e| e.conversation.as_str())
            .collect();
        assert_eq!(convs, ["c1", "c2"]);
    }

    #[test]
    fn unknown_receiver_bounces_a_failure() {
        let mut w = World::new((), 0);
        w.register_agent(sink("A")).unwrap();
        let ev = w.route(vec![ping("A", "XX", "c1")]);
        assert_eq!(ev.len(), 2);
        let back = &w.mailbox(&"A".into()).unwrap()[0];
        assert_eq!(back.performative, Performative::Failure);
        assert_eq!(back.sender, AgentId::from("XX"));
        assert_eq!(back.conversation, "c1");
        let s = w.stats();
        assert_eq!(s.routed, s.delivered + s.undeliverable);
        assert_eq!((s.undeliverable, s.notices), (1, 1));
    }

    #[test]
    fn quiescent_round_only_advances_the_clock() {
        let mut w = World::new((), 0);
        w.register_agent(echo()).unwrap();
        let before = w.agent(&"ECHO".into()).unwrap().clone();
        assert!(w.run_round().unwrap().is_empty());
        assert_eq!(w.round(), 1);
        assert_eq!(w.agent(&"ECHO".into()).unwrap(), &before);
        let out = w.run_until_quiescent(5).unwrap();
        assert_eq!((out.rounds_used, out.quiescent), (0, true));
    }

    // Round 0: the client sends the ping (sent_round 0). Round 1: ECHO adopts, commits
    // and sends in one cycle; the reply is routed with sent_round 1. Round 2:
    // the client sees it.
    fn send_ping(ctx: &StepContext<'_>) -> Vec<Envelope> {
        vec![ping(ctx.agent.as_str(), "ECHO", &ctx.conversation())]
    }

    #[test]
    fn request_handled_next_round_reply_after_that() {
        let client = AgentState::new(
            "C",
            vec![Plan::new(
                "go",
                Trigger::goal("go"),
                vec![Step::Send(send_ping)],
            )],
        )
        .unwrap();
        let mut w = World::new((), 0);
        w.register_agent(client).unwrap();
        w.register_agent(echo()).unwrap();
        w.post_goal(&"C".into(), "go", vec![]).unwrap();
        let ev = w.run_round().unwrap();
        assert_eq!(ev.len(), 1);
        assert!(w.mailbox(&"ECHO".into()).unwrap().len() == 1);
        let ev = w.run_round().unwrap();
        assert_eq!(ev.len(), 1);
        let TracePayload::Envelope(reply) = &ev[0].payload else {
            panic!()
        };
        assert_eq!(reply.performative, Performative::Inform);
        assert_eq!(reply.sent_round, 1);
        assert_eq!(w.mailbox(&"C".into()).unwrap().len(), 1);
        w.run_round().unwrap();
        assert!(w.mailbox(&"C".into()).unwrap().is_empty());
        assert!(w.is_quiescent());
    }

    fn loop_back(ctx: &StepContext<'_>) -> Vec<Envelope> {
        vec![Envelope::new(
            ctx.agent.clone(),
            ctx.agent.clone(),
            Performative::Request,
            "loop",
            Atom::new("ping", vec![]),
        )]
    }

    #[test]
    fn self_messaging_never_quiesces() {
        let agent = AgentState::new(
            "L",
            vec![Plan::new(
                "loop",
                Trigger::message(Performative::Request, "ping"),
                vec![Step::Send(loop_back)],
            )],
        )
        .unwrap();
        let mut w = World::new((), 0);
        w.register_agent(agent).unwrap();
        w.route(vec![ping("L", "L", "loop")]);
        let out = w.run_until_quiescent(25).unwrap();
        assert_eq!((out.rounds_used, out.quiescent), (25, false));
        assert_eq!(w.run_until_quiescent(0), Err(RuntimeError::ZeroBound));
    }

    fn rogue_command(ctx: &StepContext<'_>) -> Option<Command> {
        Some(Command {
            name: "add_student".into(),
            args: vec![],
            conversation: ctx.conversation(),
        })
    }

    #[test]
    fn commands_from_non_owner_are_denied() {
        let agent = AgentState::new(
            "SA",
            vec![Plan::new(
                "go",
                Trigger::goal("go"),
                vec![Step::StoreCommand(rogue_command)],
            )],
        )
        .unwrap();
        let mut w = World::new((), 0).with_env_owner("OA");
        w.register_agent(agent).unwrap();
        w.post_goal(&"SA".into(), "go", vec![]).unwrap();
        let ev = w.run_round().unwrap();
        assert!(matches!(
            &ev[0].payload,
            TracePayload::Refusal { reason, .. } if reason == ACCESS_DENIED
        ));
        assert!(w
            .agent(&"SA".into())
            .unwrap()
            .beliefs
            .query("failed")
            .next()
            .is_some());
    }

    #[test]
    fn parallel_matches_sequential() {
        let run = |mode| {
            let mut w = World::new((), 7).with_scheduling(mode);
            for i in 0..6 {
                w.register_agent(if i % 2 == 0 {
                    echo_named(i)
                } else {
                    sink(&format!("S{i}"))
                })
                .unwrap();
            }
            let pings = (0..6)
                .step_by(2)
                .flat_map(|i| {
                    (1..6)
                        .step_by(2)
                        .map(move |j| ping(&format!("S{j}"), &format!("E{i}"), &format!("c{i}{j}")))
                })
                .collect();
            let mut lines: Vec<String> = w.route(pings).iter().map(|e| e.to_line()).collect();
            let out = w.run_until_quiescent(10).unwrap();
            lines.extend(out.events.iter().map(|e| e.to_line()));
            lines
        };
        assert_eq!(run(Scheduling::Sequential), run(Scheduling::Parallel));
    }

    fn echo_named(i: usize) -> AgentState {
        let mut a = echo();
        a.id = AgentId::new(format!("E{i}"));
        a
    }
}
