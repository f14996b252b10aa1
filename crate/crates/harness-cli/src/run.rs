//! Closed-loop scenario execution.
//!
//! Each system command becomes a gateway goal; the world then runs until it
//! is quiescent (or the per-command round budget runs out) and the gateway's
//! recorded reply is the command's outcome. Every trace event is hashed,
//! optionally recorded, and fed to the monitor as it is produced.

use thiserror::Error;

use super::config::{FaultFlag, RunConfig};
use super::scenario::{ScenarioCommand, Verb};
use agent_runtime::trace::{TraceEvent, TraceLog, TracePayload};
use agent_runtime::{RuntimeError, Scheduling, World};
use bdi_kernel::kernel::BeliefDelta;
use bdi_kernel::message::{AgentId, Performative};
use bdi_kernel::term::{Atom, Term};
use ims_agents::{build_world, ImsEnvironment, Report, WorldOptions, GW};
use ims_store::dump::StoreDump;
use ims_store::Store;
use safety_monitor::{any_violated, Monitor, MonitorError, Verdict};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub config: RunConfig,
    pub fault: Option<FaultFlag>,
    pub scheduling: Scheduling,
    /// Keep trace lines in memory, not just their hash.
    pub record: bool,
    /// Replace this agent with one that never replies.
    pub mute: Option<String>,
}

impl RunOptions {
    pub fn new(config: RunConfig) -> Self {
        RunOptions {
            config,
            ..Default::default()
        }
    }

    pub fn recording(mut self) -> Self {
        self.record = true;
        self
    }

    pub fn with_fault(mut self, fault: Option<FaultFlag>) -> Self {
        self.fault = fault;
        self
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
    #[error(transparent)]
    Monitor(#[from] MonitorError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutcome {
    pub verb: Verb,
    pub line: usize,
    pub conversation: String,
    /// `None` if no reply arrived within the round budget.
    pub performative: Option<Performative>,
    pub content: Option<Atom>,
    pub rounds: u64,
    pub quiescent: bool,
    pub report: Option<Report>,
}

impl CommandOutcome {
    pub fn accepted(&self) -> bool {
        self.performative == Some(Performative::Inform)
    }

    /// The reason carried by a refuse or failure reply.
    pub fn reason(&self) -> Option<String> {
        if self.accepted() {
            return None;
        }
        self.content.as_ref()?.args.first().map(Term::plain)
    }

    /// First integer in an accepted reply, usually the new id.
    pub fn id(&self) -> Option<i64> {
        if !self.accepted() {
            return None;
        }
        self.content.as_ref()?.args.first()?.as_int()
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub verdicts: Vec<Verdict>,
    pub trace_hash: String,
    /// Full trace text when recording, header and trailer included.
    pub trace: Option<String>,
    pub dump: StoreDump,
    pub journal: String,
    pub max_latency: u64,
    pub complete: bool,
    pub rounds: u64,
    pub outcomes: Vec<CommandOutcome>,
}

impl RunResult {
    pub fn violated(&self) -> bool {
        any_violated(&self.verdicts)
    }

    pub fn verdict_lines(&self) -> String {
        self.verdicts
            .iter()
            .map(|v| format!("{}\n", v.to_line()))
            .collect()
    }

    pub fn report_lines(&self) -> Vec<String> {
        self.outcomes
            .iter()
            .filter_map(|o| o.report.as_ref())
            .flat_map(Report::lines)
            .collect()
    }
}

pub const TRACE_MAGIC: &str = "# ims-trace v1";

/// Drives one world, its monitor and its trace.
pub struct Driver {
    opts: RunOptions,
    world: World<ImsEnvironment>,
    monitor: Monitor,
    log: TraceLog,
    epoch: u64,
    complete: bool,
    outcomes: Vec<CommandOutcome>,
}

impl Driver {
    pub fn new(opts: RunOptions) -> Self {
        let store = Store::new(opts.config.store_config(opts.fault));
        let world = build_world(store, &world_options(&opts, 0, 0, 0));
        let mut log = if opts.record {
            TraceLog::recording()
        } else {
            TraceLog::hashing()
        };
        log.push_line(TRACE_MAGIC.into());
        for line in opts.config.to_string().lines() {
            log.push_line(format!("# {line}"));
        }
        log.push_line(format!(
            "# inject = {}",
            opts.fault.map_or("none".to_string(), |f| f.to_string())
        ));
        Driver {
            monitor: Monitor::new(opts.config.monitor_config()),
            opts,
            world,
            log,
            epoch: 0,
            complete: true,
            outcomes: Vec::new(),
        }
    }

    pub fn world(&self) -> &World<ImsEnvironment> {
        &self.world
    }

    pub fn store(&self) -> &Store {
        &self.world.env().store
    }

    pub fn monitor(&self) -> &Monitor {
        &self.monitor
    }

    pub fn outcomes(&self) -> &[CommandOutcome] {
        &self.outcomes
    }

    fn record(&mut self, events: &[TraceEvent]) -> Result<(), RunError> {
        for ev in events {
            self.log.push(ev);
            self.monitor.observe(ev)?;
        }
        Ok(())
    }

    /// Run one command. Harness directives (`CRASH`, `EXPECT_REFUSAL`)
    /// return `None`; `EXPECT_REFUSAL` is checked by [`run_scenario`].
    pub fn submit(&mut self, cmd: &ScenarioCommand) -> Result<Option<CommandOutcome>, RunError> {
        if cmd.verb.goal().is_none() {
            if cmd.verb == Verb::Crash {
                self.crash(false);
            }
            return Ok(None);
        }
        Ok(self.submit_batch(std::slice::from_ref(cmd))?.pop())
    }

    /// Hand every command to the gateway at once, then run to quiescence.
    /// Harness directives in the batch are skipped.
    pub fn submit_batch(
        &mut self,
        cmds: &[ScenarioCommand],
    ) -> Result<Vec<CommandOutcome>, RunError> {
        let gw = AgentId::new(GW);
        let mut pending = Vec::new();
        for cmd in cmds {
            let Some(goal) = cmd.verb.goal() else {
                continue;
            };
            let seq = self.world.post_goal(&gw, goal, cmd.goal_params())?;
            let conv = self
                .world
                .agent(&gw)
                .expect("gateway registered")
                .conversation_for(seq);
            pending.push((cmd, conv));
        }
        let budget = self
            .opts
            .config
            .max_rounds
            .saturating_mul(pending.len().max(1) as u64);
        let run = self.world.run_until_quiescent(budget)?;
        self.record(&run.events)?;
        if !run.quiescent {
            self.complete = false;
        }

        let mut out = Vec::with_capacity(pending.len());
        for (cmd, conversation) in pending {
            let (performative, content) = match self.take_reply(&conversation) {
                Some((p, c)) => (Some(p), Some(c)),
                None => (None, None),
            };
            let report = match (&performative, &content, cmd.verb) {
                (Some(Performative::Inform), Some(c), Verb::GenerateReport) => {
                    let round = run
                        .events
                        .iter()
                        .rev()
                        .find_map(|e| match &e.payload {
                            TracePayload::Envelope(env)
                                if env.receiver == gw && env.conversation == conversation =>
                            {
                                Some(env.sent_round)
                            }
                            _ => None,
                        })
                        .unwrap_or(self.world.round());
                    Report::from_atom(c, round)
                }
                _ => None,
            };
            let outcome = CommandOutcome {
                verb: cmd.verb,
                line: cmd.line,
                conversation,
                performative,
                content,
                rounds: run.rounds_used,
                quiescent: run.quiescent,
                report,
            };
            self.outcomes.push(outcome.clone());
            out.push(outcome);
        }
        Ok(out)
    }

    /// Read and forget the gateway's record of the reply on `conversation`.
    fn take_reply(&mut self, conversation: &str) -> Option<(Performative, Atom)> {
        let gw = self.world.agent_mut(&AgentId::new(GW))?;
        let belief = gw
            .beliefs
            .query("reply")
            .find(|b| b.arg(0).and_then(Term::as_str) == Some(conversation))?
            .clone();
        gw.perceive(&[BeliefDelta::Remove(belief.clone())]).ok()?;
        let perf = belief.arg(1)?.as_str()?.parse().ok()?;
        let content = belief.arg(2)?.as_str()?.parse().ok()?;
        Some((perf, content))
    }

    /// Throw away every agent and rebuild the world from the journal.
    /// A torn crash loses the tail of the last journal record.
    pub fn crash(&mut self, torn: bool) -> u64 {
        let mut journal = self.store().journal().as_text().to_string();
        if torn {
            tear(&mut journal);
        }
        let config = self.opts.config.store_config(self.opts.fault);
        let store = match Store::replay(&journal, config) {
            Ok(s) => s,
            Err(e) => *e.recovered,
        };
        let recovered = store.journal().len();
        self.epoch += 1;
        let wopts = world_options(
            &self.opts,
            self.epoch,
            self.world.round(),
            self.world.next_seq(),
        );
        self.world = build_world(store, &wopts);
        recovered
    }

    /// Snapshot the store, close the trace and compute verdicts.
    pub fn finish(mut self) -> Result<RunResult, RunError> {
        let dump = self.store().dump();
        let snap = self.world.emit(TracePayload::Snapshot(dump.clone()));
        self.record(&[snap])?;
        self.log
            .push_line(format!("# complete = {}", self.complete));
        let verdicts = self.monitor.finalize(self.complete);
        Ok(RunResult {
            verdicts,
            trace_hash: self.log.hash(),
            trace: self.opts.record.then(|| self.log.text()),
            dump,
            journal: self.store().journal().as_text().to_string(),
            max_latency: self.monitor.max_latency(),
            complete: self.complete,
            rounds: self.world.round(),
            outcomes: self.outcomes,
        })
    }
}

fn world_options(opts: &RunOptions, epoch: u64, round: u64, next_seq: u64) -> WorldOptions {
    WorldOptions {
        seed: opts.config.seed,
        scheduling: opts.scheduling,
        epoch,
        round,
        next_seq,
        null_reports: opts.fault.is_some_and(|f| f.null_reports()),
        mute: opts.mute.clone(),
    }
}

/// Cut the last journal record in half, dropping its newline.
pub fn tear(journal: &mut String) {
    let body = journal.strip_suffix('\n').unwrap_or(journal);
    let start = body.rfind('\n').map_or(0, |i| i + 1);
    let keep = start + (body.len() - start) / 2;
    journal.truncate(keep);
}

#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub result: RunResult,
    /// One message per failed `EXPECT_REFUSAL`.
    pub expectation_failures: Vec<String>,
}

impl ScenarioReport {
    /// 2 if any property is violated, 1 if an expectation failed, else 0.
    pub fn exit_code(&self) -> i32 {
        if self.result.violated() {
            2
        } else if !self.expectation_failures.is_empty() {
            1
        } else {
            0
        }
    }
}

pub fn run_scenario(
    commands: &[ScenarioCommand],
    opts: RunOptions,
) -> Result<ScenarioReport, RunError> {
    let mut driver = Driver::new(opts);
    let mut failures = Vec::new();
    let mut last: Option<CommandOutcome> = None;
    for cmd in commands {
        if cmd.verb == Verb::ExpectRefusal {
            let want = cmd.get("reason");
            match &last {
                Some(o) if o.accepted() => failures.push(format!(
                    "line {}: expected a refusal, command on line {} was accepted",
                    cmd.line, o.line
                )),
                Some(o) => {
                    if let Some(want) = want {
                        let got = o.reason().unwrap_or_default();
                        if got != want {
                            failures.push(format!(
                                "line {}: expected refusal `{want}`, got `{got}`",
                                cmd.line
                            ));
                        }
                    }
                }
                None => failures.push(format!("line {}: nothing to check", cmd.line)),
            }
            continue;
        }
        last = driver.submit(cmd)?;
    }
    Ok(ScenarioReport {
        result: driver.finish()?,
        expectation_failures: failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tear_cuts_the_last_record() {
        let mut j = "1|a|x=1|00\n2|b|y=2|11\n".to_string();
        tear(&mut j);
        assert!(j.starts_with("1|a|x=1|00\n2|b"));
        assert!(!j.ends_with('\n'));
        let mut empty = String::new();
        tear(&mut empty);
        assert!(empty.is_empty());
    }
}
