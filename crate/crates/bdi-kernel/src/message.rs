//! Agent identities and the typed inter-agent envelope.

use std::fmt;
use std::str::FromStr;

use crate::term::Atom;

/// Short symbolic agent name, e.g. `SA` or `OA`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentId(String);

impl AgentId {
    pub fn new(name: impl Into<String>) -> Self {
        AgentId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for AgentId {
    fn from(s: &str) -> Self {
        AgentId(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Performative {
    Request,
    Inform,
    Refuse,
    Failure,
}

impl Performative {
    pub const ALL: [Performative; 4] = [
        Performative::Request,
        Performative::Inform,
        Performative::Refuse,
        Performative::Failure,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Performative::Request => "request",
            Performative::Inform => "inform",
            Performative::Refuse => "refuse",
            Performative::Failure => "failure",
        }
    }

    /// Inform, refuse and failure answer a prior request.
    pub fn is_reply(self) -> bool {
        self != Performative::Request
    }
}

impl fmt::Display for Performative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Performative {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Performative::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown performative `{s}`"))
    }
}

/// One message between two agents.
///
/// A reply (inform, refuse, failure) carries the conversation id of the
/// request it answers. `sent_round` is stamped by the runtime at routing time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope {
    pub sender: AgentId,
    pub receiver: AgentId,
    pub performative: Performative,
    pub conversation: String,
    pub content: Atom,
    pub sent_round: u64,
}

impl Envelope {
    pub fn new(
        sender: AgentId,
        receiver: AgentId,
        performative: Performative,
        conversation: impl Into<String>,
        content: Atom,
    ) -> Self {
        Envelope {
            sender,
            receiver,
            performative,
            conversation: conversation.into(),
            content,
            sent_round: 0,
        }
    }

    /// Build the reply to this envelope, addressed back to its sender.
    pub fn reply(&self, performative: Performative, content: Atom) -> Envelope {
        Envelope::new(
            self.receiver.clone(),
            self.sender.clone(),
            performative,
            self.conversation.clone(),
            content,
        )
    }
}
