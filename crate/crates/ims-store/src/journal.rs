//! Append-only journal framing: one event per line,
//! `seq|name|k=v,...|crc32`, newline-terminated.

use thiserror::Error;

use super::event::{DomainEvent, EventDecodeError};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Journal {
    text: String,
    len: u64,
}

pub fn checksum(body: &str) -> String {
    format!("{:08x}", crc32fast::hash(body.as_bytes()))
}

impl Journal {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn append(&mut self, event: &DomainEvent) {
        let body = event.body();
        self.text.push_str(&body);
        self.text.push('|');
        self.text.push_str(&checksum(&body));
        self.text.push('\n');
        self.len += 1;
    }

    /// Number of records.
    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn as_text(&self) -> &str {
        &self.text
    }

    pub fn into_text(self) -> String {
        self.text
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecordError {
    #[error("record is not newline-terminated (torn write)")]
    Torn,
    #[error("record has no checksum field")]
    MissingChecksum,
    #[error("checksum mismatch")]
    Checksum,
    #[error("expected seq {expected}, found {found}")]
    OutOfSequence { expected: u64, found: u64 },
    #[error(transparent)]
    Decode(#[from] EventDecodeError),
}

/// Decode records in order, stopping at the first bad one.
///
/// Returns the valid prefix and, if decoding halted, the seq the bad record
/// should have carried together with the reason.
pub fn decode(text: &str) -> (Vec<DomainEvent>, Option<(u64, RecordError)>) {
    let mut events = Vec::new();
    let mut rest = text;
    while !rest.is_empty() {
        let expected = events.len() as u64 + 1;
        let Some(end) = rest.find('\n') else {
            return (events, Some((expected, RecordError::Torn)));
        };
        let line = &rest[..end];
        rest = &rest[end + 1..];
        match decode_line(line, expected) {
            Ok(ev) => events.push(ev),
            Err(e) => return (events, Some((expected, e))),
        }
    }
    (events, None)
}

fn decode_line(line: &str, expected: u64) -> Result<DomainEvent, RecordError> {
    let (body, crc) = line.rsplit_once('|').ok_or(RecordError::MissingChecksum)?;
    if checksum(body) != crc {
        return Err(RecordError::Checksum);
    }
    let event = DomainEvent::parse_body(body, String::new())?;
    if event.seq != expected {
        return Err(RecordError::OutOfSequence {
            expected,
            found: event.seq,
        });
    }
    Ok(event)
}
