//! The totally ordered observation stream.
//!
//! Every routed envelope, store outcome and snapshot becomes one
//! [`TraceEvent`] with a dense sequence number. Events render to the line
//! format `round|seq|kind|sender|receiver|performative|conversation|content`,
//! which is bit-exact and is what trace hashes are computed over.

use std::fmt;

use sha2::{Digest, Sha256};
use thiserror::Error;

use bdi_kernel::codec::{escape, unescape};
use bdi_kernel::message::{AgentId, Envelope, Performative};
use bdi_kernel::term::{Atom, Term};
use ims_store::dump::StoreDump;
use ims_store::event::{Change, DomainEvent};
use ims_store::RefusalKind;

/// Pseudo-receiver of store commands in trace lines.
pub const STORE: &str = "STORE";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    Envelope,
    DomainEvent,
    Refusal,
    SessionOpen,
    SessionClose,
    Snapshot,
}

impl TraceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceKind::Envelope => "envelope",
            TraceKind::DomainEvent => "domain_event",
            TraceKind::Refusal => "refusal",
            TraceKind::SessionOpen => "session_open",
            TraceKind::SessionClose => "session_close",
            TraceKind::Snapshot => "snapshot",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TracePayload {
    Envelope(Envelope),
    /// An accepted store change issued by `agent`.
    Domain {
        agent: AgentId,
        event: DomainEvent,
    },
    /// A store command declined by validation.
    Refusal {
        agent: AgentId,
        conversation: String,
        command: String,
        kind: RefusalKind,
        reason: String,
    },
    Snapshot(StoreDump),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub seq: u64,
    pub round: u64,
    pub payload: TracePayload,
}

impl TraceEvent {
    pub fn kind(&self) -> TraceKind {
        match &self.payload {
            TracePayload::Envelope(_) => TraceKind::Envelope,
            TracePayload::Domain { event, .. } => match event.change {
                Change::SessionOpened { .. } => TraceKind::SessionOpen,
                Change::SessionClosed { .. } => TraceKind::SessionClose,
                _ => TraceKind::DomainEvent,
            },
            TracePayload::Refusal { .. } => TraceKind::Refusal,
            TracePayload::Snapshot(_) => TraceKind::Snapshot,
        }
    }

    pub fn to_line(&self) -> String {
        let (sender, receiver, perf, conv, content) = match &self.payload {
            TracePayload::Envelope(e) => (
                e.sender.to_string(),
                e.receiver.to_string(),
                e.performative.to_string(),
                e.conversation.clone(),
                e.content.to_string(),
            ),
            TracePayload::Domain { agent, event } => (
                agent.to_string(),
                STORE.to_string(),
                "accepted".to_string(),
                event.conversation.clone(),
                event.body(),
            ),
            TracePayload::Refusal {
                agent,
                conversation,
                command,
                kind,
                reason,
            } => (
                agent.to_string(),
                STORE.to_string(),
                match kind {
                    RefusalKind::Refuse => "refuse",
                    RefusalKind::Failure => "failure",
                }
                .to_string(),
                conversation.clone(),
                Atom::new(command.clone(), vec![Term::text(reason.clone())]).to_string(),
            ),
            TracePayload::Snapshot(dump) => (
                "-".into(),
                "-".into(),
                "-".into(),
                "-".into(),
                dump.to_string(),
            ),
        };
        format!(
            "{}|{}|{}|{}|{}|{}|{}|{}",
            self.round,
            self.seq,
            self.kind().as_str(),
            escape(&sender),
            escape(&receiver),
            perf,
            escape(&conv),
            escape(&content)
        )
    }

    pub fn parse_line(line: &str) -> Result<TraceEvent, TraceParseError> {
        let bad = |what: &'static str| TraceParseError {
            line: line.to_string(),
            what,
        };
        let fields: Vec<&str> = line.split('|').collect();
        if fields.len() != 8 {
            return Err(bad("expected 8 fields"));
        }
        let round = fields[0].parse().map_err(|_| bad("round"))?;
        let seq = fields[1].parse().map_err(|_| bad("seq"))?;
        let field = |i: usize| unescape(fields[i]).ok_or_else(|| bad("escape"));
        let sender = field(3)?;
        let receiver = field(4)?;
        let conversation = field(6)?;
        let content = field(7)?;
        let payload = match fields[2] {
            "envelope" => {
                let performative: Performative =
                    fields[5].parse().map_err(|_| bad("performative"))?;
                TracePayload::Envelope(Envelope {
                    sender: AgentId::new(sender),
                    receiver: AgentId::new(receiver),
                    performative,
                    conversation,
                    content: content.parse().map_err(|_| bad("content"))?,
                    sent_round: round,
                })
            }
            "domain_event" | "session_open" | "session_close" => TracePayload::Domain {
                agent: AgentId::new(sender),
                event: DomainEvent::parse_body(&content, conversation)
                    .map_err(|_| bad("event body"))?,
            },
            "refusal" => {
                let atom: Atom = content.parse().map_err(|_| bad("content"))?;
                let reason = atom
                    .args
                    .first()
                    .and_then(Term::as_str)
                    .ok_or_else(|| bad("refusal reason"))?
                    .to_string();
                TracePayload::Refusal {
                    agent: AgentId::new(sender),
                    conversation,
                    command: atom.name,
                    kind: match fields[5] {
                        "refuse" => RefusalKind::Refuse,
                        "failure" => RefusalKind::Failure,
                        _ => return Err(bad("refusal kind")),
                    },
                    reason,
                }
            }
            "snapshot" => {
                TracePayload::Snapshot(StoreDump::parse(&content).ok_or_else(|| bad("dump"))?)
            }
            _ => return Err(bad("kind")),
        };
        let event = TraceEvent {
            seq,
            round,
            payload,
        };
        if event.kind().as_str() != fields[2] {
            return Err(bad("kind does not match payload"));
        }
        Ok(event)
    }
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_line())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bad trace line ({what}): {line}")]
pub struct TraceParseError {
    pub line: String,
    pub what: &'static str,
}

/// Rendered trace lines with a running SHA-256.
///
/// Header lines start with `#` and are hashed like any other line.
#[derive(Clone, Default)]
pub struct TraceLog {
    hasher: Sha256,
    lines: Option<Vec<String>>,
    count: u64,
}

impl fmt::Debug for TraceLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TraceLog")
            .field("count", &self.count)
            .finish()
    }
}

impl TraceLog {
    /// A log that keeps every rendered line.
    pub fn recording() -> Self {
        TraceLog {
            lines: Some(Vec::new()),
            ..Default::default()
        }
    }

    /// A log that only hashes.
    pub fn hashing() -> Self {
        TraceLog::default()
    }

    pub fn push_line(&mut self, line: String) {
        self.hasher.update(line.as_bytes());
        self.hasher.update(b"\n");
        self.count += 1;
        if let Some(lines) = &mut self.lines {
            lines.push(line);
        }
    }

    pub fn push(&mut self, event: &TraceEvent) {
        self.push_line(event.to_line());
    }

    pub fn len(&self) -> u64 {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn hash(&self) -> String {
        self.hasher
            .clone()
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn lines(&self) -> Option<&[String]> {
        self.lines.as_deref()
    }

    pub fn text(&self) -> String {
        let mut out = String::new();
        for line in self.lines.iter().flatten() {
            out.push_str(line);
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ims_store::dump::DumpRow;
    use ims_store::model::StudentRecord;

    fn round_trip(ev: TraceEvent) {
        let line = ev.to_line();
        assert_eq!(line.split('|').count(), 8, "{line}");
        assert_eq!(TraceEvent::parse_line(&line).unwrap(), ev);
    }

    #[test]
    fn every_kind_round_trips() {
        let mut env = Envelope::new(
            "SA".into(),
            "OA".into(),
            Performative::Request,
            "SA-0-3",
            Atom::new("add_student", vec![Term::Int(1), Term::text("A|b,c")]),
        );
        env.sent_round = 4;
        round_trip(TraceEvent {
            seq: 0,
            round: 4,
            payload: TracePayload::Envelope(env),
        });
        round_trip(TraceEvent {
            seq: 1,
            round: 4,
            payload: TracePayload::Domain {
                agent: "OA".into(),
                event: DomainEvent {
                    seq: 1,
                    conversation: "SA-0-3".into(),
                    change: Change::StudentAdded(StudentRecord {
                        st_id: "111".into(),
                        student_id: 1,
                        name: "A|b,c=d".into(),
                        dpt_id: "CS".into(),
                        program_id: None,
                        admitted_year: None,
                    }),
                },
            },
        });
        round_trip(TraceEvent {
            seq: 2,
            round: 5,
            payload: TracePayload::Domain {
                agent: "OA".into(),
                event: DomainEvent {
                    seq: 2,
                    conversation: "GW-0-0".into(),
                    change: Change::SessionOpened {
                        session: 1,
                        dpt_id: "CS".into(),
                    },
                },
            },
        });
        round_trip(TraceEvent {
            seq: 3,
            round: 5,
            payload: TracePayload::Refusal {
                agent: "OA".into(),
                conversation: "c".into(),
                command: "open_session".into(),
                kind: RefusalKind::Refuse,
                reason: "busy".into(),
            },
        });
        round_trip(TraceEvent {
            seq: 4,
            round: 6,
            payload: TracePayload::Snapshot(StoreDump {
                rows: vec![DumpRow::new("students", 1, vec![("name", "x|y".into())])],
            }),
        });
    }

    #[test]
    fn hash_is_deterministic_and_order_sensitive() {
        let mut a = TraceLog::hashing();
        let mut b = TraceLog::recording();
        for l in ["x", "y"] {
            a.push_line(l.into());
            b.push_line(l.into());
        }
        assert_eq!(a.hash(), b.hash());
        assert_eq!(b.text(), "x\ny\n");
        let mut c = TraceLog::hashing();
        c.push_line("y".into());
        c.push_line("x".into());
        assert_ne!(a.hash(), c.hash());
    }
}
