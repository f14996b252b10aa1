//! Journaled domain events.
//!
//! Each accepted mutation produces exactly one [`DomainEvent`] holding the
//! full row image of the change, so a journal can be folded back into a store
//! without re-running validation.

use std::collections::BTreeMap;

use thiserror::Error;

use super::model::*;
use bdi_kernel::codec;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Change {
    SessionOpened {
        session: i64,
        dpt_id: String,
    },
    SessionClosed {
        session: i64,
    },
    StudentAdded(StudentRecord),
    TeacherAdded(TeacherRecord),
    Admitted {
        student_id: i64,
        p_id: i64,
        year: i64,
    },
    /// A program together with its fee rows for semesters `1..=fee_rows`.
    ProgramAdded {
        program: Program,
        fee: i64,
        fee_rows: i64,
    },
    ClassAdded(ClassSection),
    TeacherAssigned {
        class_id: i64,
        teacher_id: i64,
    },
    LectureDelivered {
        class_id: i64,
        subject: String,
        count: i64,
    },
    ExamScheduled(DatesheetEntry),
    ResultRecorded(ResultRecord),
}

impl Change {
    pub fn name(&self) -> &'static str {
        match self {
            Change::SessionOpened { .. } => "open_session",
            Change::SessionClosed { .. } => "close_session",
            Change::StudentAdded(_) => "add_student",
            Change::TeacherAdded(_) => "add_teacher",
            Change::Admitted { .. } => "admit",
            Change::ProgramAdded { .. } => "add_program",
            Change::ClassAdded(_) => "add_class",
            Change::TeacherAssigned { .. } => "assign_teacher",
            Change::LectureDelivered { .. } => "deliver_lecture",
            Change::ExamScheduled(_) => "schedule_exam",
            Change::ResultRecorded(_) => "record_result",
        }
    }

    /// Ordered field image, as written to the journal.
    pub fn fields(&self) -> Vec<(&'static str, String)> {
        match self {
            Change::SessionOpened { session, dpt_id } => {
                vec![("session", session.to_string()), ("dpt", dpt_id.clone())]
            }
            Change::SessionClosed { session } => vec![("session", session.to_string())],
            Change::StudentAdded(s) => vec![
                ("student_id", s.student_id.to_string()),
                ("st_id", s.st_id.clone()),
                ("name", s.name.clone()),
                ("dpt", s.dpt_id.clone()),
            ],
            Change::TeacherAdded(t) => vec![
                ("teacher_id", t.teacher_id.to_string()),
                ("name", t.name.clone()),
                ("designation", t.designation.clone()),
                ("contact", t.contact.clone()),
                ("email", t.email.clone()),
            ],
            Change::Admitted {
                student_id,
                p_id,
                year,
            } => vec![
                ("student_id", student_id.to_string()),
                ("p_id", p_id.to_string()),
                ("year", year.to_string()),
            ],
            Change::ProgramAdded {
                program,
                fee,
                fee_rows,
            } => vec![
                ("p_id", program.p_id.to_string()),
                ("name", program.name.clone()),
                ("session", program.session.to_string()),
                ("semesters", program.semester_count.to_string()),
                ("fee", fee.to_string()),
                ("fee_rows", fee_rows.to_string()),
            ],
            Change::ClassAdded(c) => vec![
                ("class_id", c.class_id.to_string()),
                ("p_id", c.p_id.to_string()),
                ("semester", c.semester.to_string()),
                ("subject", c.subject.clone()),
                ("day", c.timing.day.to_string()),
                ("period", c.timing.period.to_string()),
            ],
            Change::TeacherAssigned {
                class_id,
                teacher_id,
            } => vec![
                ("class_id", class_id.to_string()),
                ("teacher_id", teacher_id.to_string()),
            ],
            Change::LectureDelivered {
                class_id,
                subject,
                count,
            } => vec![
                ("class_id", class_id.to_string()),
                ("subject", subject.clone()),
                ("count", count.to_string()),
            ],
            Change::ExamScheduled(e) => vec![
                ("term", e.term.to_string()),
                ("class_id", e.class_id.to_string()),
                ("subject", e.subject.clone()),
                ("date", e.date.format("%Y-%m-%d").to_string()),
            ],
            Change::ResultRecorded(r) => vec![
                ("student_id", r.student_id.to_string()),
                ("class_id", r.class_id.to_string()),
                ("subject", r.subject.clone()),
                ("marks", r.marks.to_string()),
                ("year", r.year.to_string()),
            ],
        }
    }

    /// Names of the text fields that must never be stored empty.
    pub fn required_text(&self) -> &'static [&'static str] {
        match self {
            Change::SessionOpened { .. } => &["dpt"],
            Change::StudentAdded(_) => &["st_id", "name", "dpt"],
            Change::TeacherAdded(_) => &["name", "designation", "contact", "email"],
            Change::ProgramAdded { .. } => &["name"],
            Change::ClassAdded(_) => &["subject"],
            Change::LectureDelivered { .. } => &["subject"],
            Change::ExamScheduled(_) => &["subject"],
            Change::ResultRecorded(_) => &["subject"],
            Change::SessionClosed { .. }
            | Change::Admitted { .. }
            | Change::TeacherAssigned { .. } => &[],
        }
    }

    /// First required text field that is empty, if any.
    pub fn empty_required_field(&self) -> Option<&'static str> {
        let fields = self.fields();
        self.required_text()
            .iter()
            .copied()
            .find(|name| fields.iter().any(|(k, v)| k == name && v.trim().is_empty()))
    }

    pub fn from_fields(
        name: &str,
        fields: &[(String, String)],
    ) -> Result<Change, EventDecodeError> {
        let map: BTreeMap<&str, &str> = fields
            .iter()
            .map(|(k, v)| (k.as_str(), v.as_str()))
            .collect();
        let get = |k: &'static str| -> Result<String, EventDecodeError> {
            map.get(k)
                .map(|v| v.to_string())
                .ok_or(EventDecodeError::MissingField(k))
        };
        let int = |k: &'static str| -> Result<i64, EventDecodeError> {
            get(k)?.parse().map_err(|_| EventDecodeError::BadField(k))
        };
        Ok(match name {
            "open_session" => Change::SessionOpened {
                session: int("session")?,
                dpt_id: get("dpt")?,
            },
            "close_session" => Change::SessionClosed {
                session: int("session")?,
            },
            "add_student" => Change::StudentAdded(StudentRecord {
                st_id: get("st_id")?,
                student_id: int("student_id")?,
                name: get("name")?,
                dpt_id: get("dpt")?,
                program_id: None,
                admitted_year: None,
            }),
            "add_teacher" => Change::TeacherAdded(TeacherRecord {
                teacher_id: int("teacher_id")?,
                name: get("name")?,
                designation: get("designation")?,
                contact: get("contact")?,
                email: get("email")?,
            }),
            "admit" => Change::Admitted {
                student_id: int("student_id")?,
                p_id: int("p_id")?,
                year: int("year")?,
            },
            "add_program" => Change::ProgramAdded {
                program: Program {
                    p_id: int("p_id")?,
                    name: get("name")?,
                    session: get("session")?
                        .parse()
                        .map_err(|_| EventDecodeError::BadField("session"))?,
                    semester_count: int("semesters")?,
                },
                fee: int("fee")?,
                fee_rows: int("fee_rows")?,
            },
            "add_class" => Change::ClassAdded(ClassSection {
                class_id: int("class_id")?,
                p_id: int("p_id")?,
                semester: int("semester")?,
                subject: get("subject")?,
                timing: Timing {
                    day: int("day")?,
                    period: int("period")?,
                },
                teacher_id: None,
            }),
            "assign_teacher" => Change::TeacherAssigned {
                class_id: int("class_id")?,
                teacher_id: int("teacher_id")?,
            },
            "deliver_lecture" => Change::LectureDelivered {
                class_id: int("class_id")?,
                subject: get("subject")?,
                count: int("count")?,
            },
            "schedule_exam" => Change::ExamScheduled(DatesheetEntry {
                term: get("term")?
                    .parse()
                    .map_err(|_| EventDecodeError::BadField("term"))?,
                date: parse_date(&get("date")?).ok_or(EventDecodeError::BadField("date"))?,
                class_id: int("class_id")?,
                subject: get("subject")?,
            }),
            "record_result" => Change::ResultRecorded(ResultRecord {
                student_id: int("student_id")?,
                class_id: int("class_id")?,
                subject: get("subject")?,
                marks: int("marks")?,
                year: int("year")?,
            }),
            other => return Err(EventDecodeError::UnknownEvent(other.to_string())),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EventDecodeError {
    #[error("unknown event `{0}`")]
    UnknownEvent(String),
    #[error("missing field `{0}`")]
    MissingField(&'static str),
    #[error("bad value for field `{0}`")]
    BadField(&'static str),
    #[error("malformed event record")]
    Malformed,
}

/// A journaled, accepted change.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainEvent {
    /// Dense journal sequence, starting at 1.
    pub seq: u64,
    /// Conversation of the command that produced it; not journaled.
    pub conversation: String,
    pub change: Change,
}

impl DomainEvent {
    /// `seq|name|k=v,...`, the journal record without its checksum.
    pub fn body(&self) -> String {
        let fields = self.change.fields();
        format!(
            "{}|{}|{}",
            self.seq,
            self.change.name(),
            codec::encode_pairs(fields.iter().map(|(k, v)| (*k, v.as_str())))
        )
    }

    pub fn parse_body(body: &str, conversation: String) -> Result<DomainEvent, EventDecodeError> {
        let mut parts = body.splitn(3, '|');
        let seq = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or(EventDecodeError::Malformed)?;
        let name = parts.next().ok_or(EventDecodeError::Malformed)?;
        let fields = parts
            .next()
            .and_then(codec::decode_pairs)
            .ok_or(EventDecodeError::Malformed)?;
        Ok(DomainEvent {
            seq,
            conversation,
            change: Change::from_fields(name, &fields)?,
        })
    }
}
