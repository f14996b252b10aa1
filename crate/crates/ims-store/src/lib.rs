//! The single database behind the orchestrator agent.
//!
//! Commands are validated against every table invariant, journaled, then
//! applied. A refused command leaves both the journal and the tables
//! untouched. The journal alone is enough to rebuild the store
//! ([`Store::replay`]); live mutation and replay share [`Store::apply_change`].

pub mod dump;
pub mod event;
pub mod journal;
pub mod model;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use bdi_kernel::kernel::Command;
use bdi_kernel::term::{Atom, Term};
use dump::{DumpRow, StoreDump};
use event::{Change, DomainEvent};
use journal::{Journal, RecordError};
use model::*;

/// Refusal reasons surfaced to users. Some are literal strings from the
/// original requirements, misspelling included.
pub mod reason {
    pub const ALREADY_REGISTERED: &str = "Student Already Registerd";
    pub const TEACHER_ALREADY_REGISTERED: &str = "Teacher Already Registered";
    pub const BUSY: &str = "busy";
    pub const UNAUTHORIZED: &str = "unauthorized access";
    pub const DUPLICATE_ADMISSION: &str = "duplicate admission request";
    pub const SAME_TIMING: &str = "same timing";
    pub const SAME_DATE: &str = "same date conflict";
    pub const INCOMPLETE: &str = "incomplete record";
    pub const INSUFFICIENT_LECTURES: &str = "insufficient lectures";
    pub const MARKS_OUT_OF_RANGE: &str = "marks out of range";
    pub const NOT_ADMITTED: &str = "student not admitted";
    pub const MALFORMED: &str = "malformed command";
}

/// A validation rule that a fault-injection run may switch off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Guard {
    RegistrationUnique,
    SessionCapacity,
    DepartmentRoster,
    DuplicateAdmission,
    FeeSync,
    TimeConflict,
    TermThreshold,
    DateConflict,
    Completeness,
    MarksBounds,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarksPolicy {
    pub min: i64,
    pub max: i64,
    /// Per-subject `(min, max)` overrides.
    pub per_subject: BTreeMap<String, (i64, i64)>,
}

impl Default for MarksPolicy {
    fn default() -> Self {
        MarksPolicy {
            min: 0,
            max: 100,
            per_subject: BTreeMap::new(),
        }
    }
}

impl MarksPolicy {
    pub fn bounds(&self, subject: &str) -> (i64, i64) {
        self.per_subject
            .get(subject)
            .copied()
            .unwrap_or((self.min, self.max))
    }

    pub fn admits(&self, subject: &str, marks: i64) -> bool {
        let (min, max) = self.bounds(subject);
        marks >= 0 && marks >= min && marks <= max
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoreConfig {
    /// Maximum number of concurrently open sessions.
    pub cap: usize,
    /// Department ids allowed to open a session.
    pub cs_roster: BTreeSet<String>,
    pub min_lectures_mid: i64,
    pub min_lectures_final: i64,
    pub marks: MarksPolicy,
    pub lab_count: i64,
    pub disabled: BTreeSet<Guard>,
}

impl Default for StoreConfig {
    fn default() -> Self {
        StoreConfig {
            cap: 1000,
            cs_roster: ["CS", "IT"].into_iter().map(String::from).collect(),
            min_lectures_mid: 16,
            min_lectures_final: 32,
            marks: MarksPolicy::default(),
            lab_count: 4,
            disabled: BTreeSet::new(),
        }
    }
}

impl StoreConfig {
    fn enforces(&self, guard: Guard) -> bool {
        !self.disabled.contains(&guard)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefusalKind {
    /// The request was understood and declined by a rule.
    Refuse,
    /// The request could not be processed (malformed, dangling reference).
    Failure,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{reason}")]
pub struct Refusal {
    pub kind: RefusalKind,
    pub reason: String,
}

impl Refusal {
    pub fn refuse(reason: impl Into<String>) -> Self {
        Refusal {
            kind: RefusalKind::Refuse,
            reason: reason.into(),
        }
    }

    pub fn failure(reason: impl Into<String>) -> Self {
        Refusal {
            kind: RefusalKind::Failure,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ReportKind {
    GraduatesPerYear,
    AdmissionsPerYear,
    Attendance,
    TeacherStudentRatio,
    LabStudentRatio,
}

impl ReportKind {
    pub const ALL: [ReportKind; 5] = [
        ReportKind::GraduatesPerYear,
        ReportKind::AdmissionsPerYear,
        ReportKind::Attendance,
        ReportKind::TeacherStudentRatio,
        ReportKind::LabStudentRatio,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ReportKind::GraduatesPerYear => "graduates_per_year",
            ReportKind::AdmissionsPerYear => "admissions_per_year",
            ReportKind::Attendance => "attendance",
            ReportKind::TeacherStudentRatio => "teacher_student_ratio",
            ReportKind::LabStudentRatio => "lab_student_ratio",
        }
    }
}

impl fmt::Display for ReportKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReportKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        ReportKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown report kind `{s}`"))
    }
}

/// Read-only table scan with an optional equality filter on one field
/// (`pk` filters on the primary key).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub table: String,
    pub filter: Option<(String, String)>,
}

pub const TABLES: [&str; 10] = [
    "classes",
    "datesheet",
    "fees",
    "lectures",
    "meta",
    "programs",
    "results",
    "sessions",
    "students",
    "teachers",
];

/// Successful outcome of [`Store::execute`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reply {
    pub content: Atom,
    pub event: Option<DomainEvent>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("journal replay halted at seq {seq}: {reason}")]
pub struct ReplayError {
    pub seq: u64,
    pub reason: RecordError,
    /// Store rebuilt from the valid prefix.
    pub recovered: Box<Store>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Store {
    config: StoreConfig,
    students: BTreeMap<i64, StudentRecord>,
    st_index: BTreeMap<String, i64>,
    teachers: BTreeMap<i64, TeacherRecord>,
    programs: BTreeMap<i64, Program>,
    fees: BTreeMap<(i64, i64), FeeStructure>,
    classes: BTreeMap<i64, ClassSection>,
    lectures: BTreeMap<(i64, String), LectureLog>,
    datesheet: BTreeMap<(i64, chrono::NaiveDate, String), DatesheetEntry>,
    results: BTreeMap<(i64, i64, String), ResultRecord>,
    sessions: BTreeMap<i64, String>,
    next_session: i64,
    journal: Journal,
}

struct Args<'a> {
    cmd: &'a Command,
    completeness: bool,
}

impl Args<'_> {
    fn arity(&self, n: usize) -> Result<(), Refusal> {
        if self.cmd.args.len() == n {
            Ok(())
        } else {
            Err(Refusal::failure(format!(
                "{}: {} expects {n} arguments",
                reason::MALFORMED,
                self.cmd.name
            )))
        }
    }

    fn term(&self, i: usize) -> Result<&Term, Refusal> {
        self.cmd
            .args
            .get(i)
            .ok_or_else(|| Refusal::failure(reason::MALFORMED))
    }

    fn text(&self, i: usize) -> Result<String, Refusal> {
        let t = self.term(i)?;
        if t.is_empty() && self.completeness {
            return Err(Refusal::refuse(reason::INCOMPLETE));
        }
        Ok(t.plain())
    }

    fn int(&self, i: usize) -> Result<i64, Refusal> {
        match self.term(i)? {
            Term::Int(v) => Ok(*v),
            t if t.is_empty() => Err(Refusal::refuse(reason::INCOMPLETE)),
            t => t.plain().trim().parse().map_err(|_| {
                Refusal::failure(format!("{}: `{}` is not an integer", reason::MALFORMED, t))
            }),
        }
    }
}

fn next_key<V>(map: &BTreeMap<i64, V>) -> i64 {
    map.keys().next_back().map_or(1, |k| k + 1)
}

impl Store {
    pub fn new(config: StoreConfig) -> Self {
        Store {
            config,
            students: BTreeMap::new(),
            st_index: BTreeMap::new(),
            teachers: BTreeMap::new(),
            programs: BTreeMap::new(),
            fees: BTreeMap::new(),
            classes: BTreeMap::new(),
            lectures: BTreeMap::new(),
            datesheet: BTreeMap::new(),
            results: BTreeMap::new(),
            sessions: BTreeMap::new(),
            next_session: 1,
            journal: Journal::new(),
        }
    }

    pub fn config(&self) -> &StoreConfig {
        &self.config
    }

    pub fn journal(&self) -> &Journal {
        &self.journal
    }

    pub fn open_sessions(&self) -> impl Iterator<Item = (i64, &str)> {
        self.sessions.iter().map(|(k, v)| (*k, v.as_str()))
    }

    pub fn student(&self, student_id: i64) -> Option<&StudentRecord> {
        self.students.get(&student_id)
    }

    pub fn class(&self, class_id: i64) -> Option<&ClassSection> {
        self.classes.get(&class_id)
    }

    /// Open a session for a member of department `dpt_id`.
    pub fn open_session(
        &mut self,
        dpt_id: &str,
        conversation: &str,
    ) -> Result<DomainEvent, Refusal> {
        self.apply(&Command {
            name: "open_session".into(),
            args: vec![Term::text(dpt_id)],
            conversation: conversation.into(),
        })
    }

    /// Route a command to a mutation, a query or a report-data read.
    pub fn execute(&mut self, cmd: &Command) -> Result<Reply, Refusal> {
        match cmd.name.as_str() {
            "query" => {
                let args = Args {
                    cmd,
                    completeness: true,
                };
                let query = match cmd.args.len() {
                    1 => Query {
                        table: args.text(0)?,
                        filter: None,
                    },
                    3 => Query {
                        table: args.text(0)?,
                        filter: Some((args.text(1)?, cmd.args[2].plain())),
                    },
                    _ => return Err(Refusal::failure(reason::MALFORMED)),
                };
                let rows = self.query(&query)?;
                Ok(Reply {
                    content: Atom::new(
                        "query",
                        rows.iter().map(|r| Term::Text(r.to_line())).collect(),
                    ),
                    event: None,
                })
            }
            "report_data" => {
                let args = Args {
                    cmd,
                    completeness: true,
                };
                args.arity(1)?;
                let kind: ReportKind = args
                    .text(0)?
                    .parse()
                    .map_err(|e: String| Refusal::failure(e))?;
                let mut out = vec![Term::id(kind.as_str())];
                for (label, value) in self.report_data(kind) {
                    out.push(Term::Text(label));
                    out.push(Term::Int(value));
                }
                Ok(Reply {
                    content: Atom::new("report_data", out),
                    event: None,
                })
            }
            _ => {
                let event = self.apply(cmd)?;
                Ok(Reply {
                    content: Atom::new(cmd.name.clone(), reply_args(&event.change)),
                    event: Some(event),
                })
            }
        }
    }

    /// Validate, journal, then mutate. Refusals leave everything untouched.
    pub fn apply(&mut self, cmd: &Command) -> Result<DomainEvent, Refusal> {
        let change = self.validate(cmd)?;
        let event = DomainEvent {
            seq: self.journal.len() + 1,
            conversation: cmd.conversation.clone(),
            change,
        };
        self.journal.append(&event);
        self.apply_change(&event.change);
        Ok(event)
    }

    fn validate(&self, cmd: &Command) -> Result<Change, Refusal> {
        let cfg = &self.config;
        let a = Args {
            cmd,
            completeness: cfg.enforces(Guard::Completeness),
        };
        let refuse_if = |guard: Guard, cond: bool, why: &str| {
            if cfg.enforces(guard) && cond {
                Err(Refusal::refuse(why))
            } else {
                Ok(())
            }
        };
        match cmd.name.as_str() {
            "open_session" => {
                a.arity(1)?;
                let dpt_id = a.text(0)?;
                refuse_if(
                    Guard::DepartmentRoster,
                    !cfg.cs_roster.contains(&dpt_id),
                    reason::UNAUTHORIZED,
                )?;
                refuse_if(
                    Guard::SessionCapacity,
                    self.sessions.len() >= cfg.cap,
                    reason::BUSY,
                )?;
                Ok(Change::SessionOpened {
                    session: self.next_session,
                    dpt_id,
                })
            }
            "close_session" => {
                a.arity(1)?;
                let session = a.int(0)?;
                if !self.sessions.contains_key(&session) {
                    return Err(Refusal::refuse(format!("unknown session {session}")));
                }
                Ok(Change::SessionClosed { session })
            }
            "add_student" => {
                a.arity(3)?;
                let st_id = a.text(0)?;
                let name = a.text(1)?;
                let dpt_id = a.text(2)?;
                refuse_if(
                    Guard::RegistrationUnique,
                    self.st_index.contains_key(&st_id),
                    reason::ALREADY_REGISTERED,
                )?;
                Ok(Change::StudentAdded(StudentRecord {
                    st_id,
                    student_id: next_key(&self.students),
                    name,
                    dpt_id,
                    program_id: None,
                    admitted_year: None,
                }))
            }
            "add_teacher" => {
                a.arity(4)?;
                let name = a.text(0)?;
                let designation = a.text(1)?;
                let contact = a.text(2)?;
                let email = a.text(3)?;
                if self.teachers.values().any(|t| t.email == email) {
                    return Err(Refusal::refuse(reason::TEACHER_ALREADY_REGISTERED));
                }
                Ok(Change::TeacherAdded(TeacherRecord {
                    teacher_id: next_key(&self.teachers),
                    name,
                    designation,
                    contact,
                    email,
                }))
            }
            "admit" => {
                a.arity(3)?;
                let student_id = a.int(0)?;
                let p_id = a.int(1)?;
                let year = a.int(2)?;
                let student = self
                    .students
                    .get(&student_id)
                    .ok_or_else(|| Refusal::failure(format!("unknown student {student_id}")))?;
                if !self.programs.contains_key(&p_id) {
                    return Err(Refusal::failure(format!("unknown program {p_id}")));
                }
                if year < 1 {
                    return Err(Refusal::refuse("invalid year"));
                }
                refuse_if(
                    Guard::DuplicateAdmission,
                    student.program_id.is_some(),
                    reason::DUPLICATE_ADMISSION,
                )?;
                Ok(Change::Admitted {
                    student_id,
                    p_id,
                    year,
                })
            }
            "add_program" => {
                a.arity(4)?;
                let name = a.text(0)?;
                let session_text = a.text(1)?;
                let semester_count = a.int(2)?;
                let fee = a.int(3)?;
                let session: SessionKind = session_text
                    .parse()
                    .map_err(|_| Refusal::refuse(format!("invalid session `{session_text}`")))?;
                if semester_count < 1 {
                    return Err(Refusal::refuse("invalid semester count"));
                }
                if fee < 0 {
                    return Err(Refusal::refuse("invalid fee"));
                }
                let fee_rows = if cfg.enforces(Guard::FeeSync) {
                    semester_count
                } else {
                    0
                };
                Ok(Change::ProgramAdded {
                    program: Program {
                        p_id: next_key(&self.programs),
                        name,
                        session,
                        semester_count,
                    },
                    fee,
                    fee_rows,
                })
            }
            "add_class" => {
                a.arity(5)?;
                let p_id = a.int(0)?;
                let semester = a.int(1)?;
                let subject = a.text(2)?;
                let timing = Timing {
                    day: a.int(3)?,
                    period: a.int(4)?,
                };
                let program = self
                    .programs
                    .get(&p_id)
                    .ok_or_else(|| Refusal::failure(format!("unknown program {p_id}")))?;
                if !(1..=program.semester_count).contains(&semester) {
                    return Err(Refusal::refuse("invalid semester"));
                }
                if !timing.is_valid() {
                    return Err(Refusal::refuse("invalid timing"));
                }
                refuse_if(
                    Guard::TimeConflict,
                    self.classes
                        .values()
                        .any(|c| c.p_id == p_id && c.semester == semester && c.timing == timing),
                    reason::SAME_TIMING,
                )?;
                Ok(Change::ClassAdded(ClassSection {
                    class_id: next_key(&self.classes),
                    p_id,
                    semester,
                    subject,
                    timing,
                    teacher_id: None,
                }))
            }
            "assign_teacher" => {
                a.arity(2)?;
                let class_id = a.int(0)?;
                let teacher_id = a.int(1)?;
                let class = self
                    .classes
                    .get(&class_id)
                    .ok_or_else(|| Refusal::failure(format!("unknown class {class_id}")))?;
                if !self.teachers.contains_key(&teacher_id) {
                    return Err(Refusal::failure(format!("unknown teacher {teacher_id}")));
                }
                refuse_if(
                    Guard::TimeConflict,
                    self.classes.values().any(|c| {
                        c.class_id != class_id
                            && c.teacher_id == Some(teacher_id)
                            && c.timing == class.timing
                    }),
                    reason::SAME_TIMING,
                )?;
                Ok(Change::TeacherAssigned {
                    class_id,
                    teacher_id,
                })
            }
            "deliver_lecture" => {
                a.arity(3)?;
                let class_id = a.int(0)?;
                let subject = a.text(1)?;
                let count = a.int(2)?;
                if !self.classes.contains_key(&class_id) {
                    return Err(Refusal::failure(format!("unknown class {class_id}")));
                }
                if count < 1 {
                    return Err(Refusal::refuse("invalid lecture count"));
                }
                Ok(Change::LectureDelivered {
                    class_id,
                    subject,
                    count,
                })
            }
            "schedule_exam" => {
                a.arity(4)?;
                let term_text = a.text(0)?;
                let class_id = a.int(1)?;
                let subject = a.text(2)?;
                let date_text = a.text(3)?;
                let term: ExamTerm = term_text
                    .parse()
                    .map_err(|_| Refusal::refuse(format!("invalid term `{term_text}`")))?;
                let date = parse_date(&date_text)
                    .ok_or_else(|| Refusal::refuse(format!("invalid date `{date_text}`")))?;
                if !self.classes.contains_key(&class_id) {
                    return Err(Refusal::failure(format!("unknown class {class_id}")));
                }
                let delivered = self
                    .lectures
                    .get(&(class_id, subject.clone()))
                    .ok_or_else(|| {
                        Refusal::failure(format!("no lecture log for class {class_id} {subject}"))
                    })?
                    .lectures_delivered;
                let needed = match term {
                    ExamTerm::Mid => cfg.min_lectures_mid,
                    ExamTerm::Final => cfg.min_lectures_final,
                };
                refuse_if(
                    Guard::TermThreshold,
                    delivered < needed,
                    reason::INSUFFICIENT_LECTURES,
                )?;
                refuse_if(
                    Guard::DateConflict,
                    self.datesheet
                        .keys()
                        .any(|(c, d, _)| *c == class_id && *d == date),
                    reason::SAME_DATE,
                )?;
                Ok(Change::ExamScheduled(DatesheetEntry {
                    term,
                    date,
                    class_id,
                    subject,
                }))
            }
            "record_result" => {
                a.arity(5)?;
                let student_id = a.int(0)?;
                let class_id = a.int(1)?;
                let subject = a.text(2)?;
                let marks = a.int(3)?;
                let year = a.int(4)?;
                let student = self
                    .students
                    .get(&student_id)
                    .ok_or_else(|| Refusal::failure(format!("unknown student {student_id}")))?;
                if !self.classes.contains_key(&class_id) {
                    return Err(Refusal::failure(format!("unknown class {class_id}")));
                }
                if student.program_id.is_none() {
                    return Err(Refusal::refuse(reason::NOT_ADMITTED));
                }
                if year < 1 {
                    return Err(Refusal::refuse("invalid year"));
                }
                refuse_if(
                    Guard::MarksBounds,
                    !cfg.marks.admits(&subject, marks),
                    reason::MARKS_OUT_OF_RANGE,
                )?;
                Ok(Change::ResultRecorded(ResultRecord {
                    student_id,
                    class_id,
                    subject,
                    marks,
                    year,
                }))
            }
            other => Err(Refusal::failure(format!("unknown command `{other}`"))),
        }
    }

    /// Fold one accepted change into the tables. No validation happens here.
    pub fn apply_change(&mut self, change: &Change) {
        match change {
            Change::SessionOpened { session, dpt_id } => {
                self.sessions.insert(*session, dpt_id.clone());
                self.next_session = self.next_session.max(session + 1);
            }
            Change::SessionClosed { session } => {
                self.sessions.remove(session);
            }
            Change::StudentAdded(s) => {
                self.st_index.insert(s.st_id.clone(), s.student_id);
                self.students.insert(s.student_id, s.clone());
            }
            Change::TeacherAdded(t) => {
                self.teachers.insert(t.teacher_id, t.clone());
            }
            Change::Admitted {
                student_id,
                p_id,
                year,
            } => {
                if let Some(s) = self.students.get_mut(student_id) {
                    s.program_id = Some(*p_id);
                    s.admitted_year = Some(*year);
                }
            }
            Change::ProgramAdded {
                program,
                fee,
                fee_rows,
            } => {
                for semester in 1..=*fee_rows {
                    self.fees.insert(
                        (program.p_id, semester),
                        FeeStructure {
                            p_id: program.p_id,
                            semester,
                            amount: *fee,
                        },
                    );
                }
                self.programs.insert(program.p_id, program.clone());
            }
            Change::ClassAdded(c) => {
                self.lectures
                    .entry((c.class_id, c.subject.clone()))
                    .or_insert_with(|| LectureLog {
                        class_id: c.class_id,
                        subject: c.subject.clone(),
                        lectures_delivered: 0,
                    });
                self.classes.insert(c.class_id, c.clone());
            }
            Change::TeacherAssigned {
                class_id,
                teacher_id,
            } => {
                if let Some(c) = self.classes.get_mut(class_id) {
                    c.teacher_id = Some(*teacher_id);
                }
            }
            Change::LectureDelivered {
                class_id,
                subject,
                count,
            } => {
                self.lectures
                    .entry((*class_id, subject.clone()))
                    .or_insert_with(|| LectureLog {
                        class_id: *class_id,
                        subject: subject.clone(),
                        lectures_delivered: 0,
                    })
                    .lectures_delivered += count;
            }
            Change::ExamScheduled(e) => {
                self.datesheet
                    .insert((e.class_id, e.date, e.subject.clone()), e.clone());
            }
            Change::ResultRecorded(r) => {
                self.results
                    .insert((r.student_id, r.class_id, r.subject.clone()), r.clone());
            }
        }
    }

    /// Rebuild a store from journal text.
    pub fn replay(text: &str, config: StoreConfig) -> Result<Store, ReplayError> {
        let (events, halt) = journal::decode(text);
        let mut store = Store::new(config);
        for ev in &events {
            store.journal.append(ev);
            store.apply_change(&ev.change);
        }
        match halt {
            None => Ok(store),
            Some((seq, reason)) => Err(ReplayError {
                seq,
                reason,
                recovered: Box::new(store),
            }),
        }
    }

    pub fn query(&self, q: &Query) -> Result<Vec<DumpRow>, Refusal> {
        if !TABLES.contains(&q.table.as_str()) {
            return Err(Refusal::refuse(format!("unknown table `{}`", q.table)));
        }
        let rows = self.table_rows(&q.table);
        Ok(match &q.filter {
            None => rows,
            Some((field, value)) => rows
                .into_iter()
                .filter(|r| {
                    if field == "pk" {
                        r.pk == *value
                    } else {
                        r.get(field) == Some(value.as_str())
                    }
                })
                .collect(),
        })
    }

    /// Raw `(label, value)` aggregates behind each report kind. Ratio kinds
    /// return numerator then denominator rows.
    pub fn report_data(&self, kind: ReportKind) -> Vec<(String, i64)> {
        match kind {
            ReportKind::AdmissionsPerYear => {
                let mut per_year: BTreeMap<i64, i64> = BTreeMap::new();
                for s in self.students.values() {
                    if let Some(y) = s.admitted_year {
                        *per_year.entry(y).or_default() += 1;
                    }
                }
                per_year
                    .into_iter()
                    .map(|(y, n)| (format!("year {y}"), n))
                    .collect()
            }
            ReportKind::GraduatesPerYear => {
                let mut per_year: BTreeMap<i64, i64> = BTreeMap::new();
                for s in self.students.values() {
                    if let Some(year) = self.graduation_year(s) {
                        *per_year.entry(year).or_default() += 1;
                    }
                }
                per_year
                    .into_iter()
                    .map(|(y, n)| (format!("year {y}"), n))
                    .collect()
            }
            ReportKind::Attendance => self
                .lectures
                .values()
                .map(|l| {
                    (
                        format!("class {} {}", l.class_id, l.subject),
                        l.lectures_delivered,
                    )
                })
                .collect(),
            ReportKind::TeacherStudentRatio => vec![
                ("teachers".into(), self.teachers.len() as i64),
                ("students".into(), self.students.len() as i64),
            ],
            ReportKind::LabStudentRatio => vec![
                ("labs".into(), self.config.lab_count),
                ("students".into(), self.students.len() as i64),
            ],
        }
    }

    /// A student graduates in the latest year among their final-semester
    /// results once every final-semester class of their program has one.
    fn graduation_year(&self, s: &StudentRecord) -> Option<i64> {
        let program = self.programs.get(&s.program_id?)?;
        let finals: Vec<i64> = self
            .classes
            .values()
            .filter(|c| c.p_id == program.p_id && c.semester == program.semester_count)
            .map(|c| c.class_id)
            .collect();
        if finals.is_empty() {
            return None;
        }
        let mut year = 0;
        for class_id in finals {
            let latest = self
                .results
                .range((s.student_id, class_id, String::new())..)
                .take_while(|((st, c, _), _)| *st == s.student_id && *c == class_id)
                .map(|(_, r)| r.year)
                .max()?;
            year = year.max(latest);
        }
        Some(year)
    }

    fn table_rows(&self, table: &str) -> Vec<DumpRow> {
        let opt = |v: Option<i64>| v.map(|x| x.to_string()).unwrap_or_default();
        match table {
            "classes" => self
                .classes
                .values()
                .map(|c| {
                    DumpRow::new(
                        "classes",
                        c.class_id,
                        vec![
                            ("p_id", c.p_id.to_string()),
                            ("semester", c.semester.to_string()),
                            ("subject", c.subject.clone()),
                            ("day", c.timing.day.to_string()),
                            ("period", c.timing.period.to_string()),
                            ("teacher_id", opt(c.teacher_id)),
                        ],
                    )
                })
                .collect(),
            "datesheet" => self
                .datesheet
                .values()
                .map(|e| {
                    let date = e.date.format("%Y-%m-%d").to_string();
                    DumpRow::new(
                        "datesheet",
                        format!("{}:{}:{}", e.class_id, date, e.subject),
                        vec![
                            ("term", e.term.to_string()),
                            ("class_id", e.class_id.to_string()),
                            ("subject", e.subject.clone()),
                            ("date", date),
                        ],
                    )
                })
                .collect(),
            "fees" => self
                .fees
                .values()
                .map(|f| {
                    DumpRow::new(
                        "fees",
                        format!("{}:{}", f.p_id, f.semester),
                        vec![
                            ("p_id", f.p_id.to_string()),
                            ("semester", f.semester.to_string()),
                            ("amount", f.amount.to_string()),
                        ],
                    )
                })
                .collect(),
            "lectures" => self
                .lectures
                .values()
                .map(|l| {
                    DumpRow::new(
                        "lectures",
                        format!("{}:{}", l.class_id, l.subject),
                        vec![
                            ("class_id", l.class_id.to_string()),
                            ("subject", l.subject.clone()),
                            ("delivered", l.lectures_delivered.to_string()),
                        ],
                    )
                })
                .collect(),
            "meta" => vec![DumpRow::new(
                "meta",
                "counters",
                vec![
                    ("journal_len", self.journal.len().to_string()),
                    ("next_session", self.next_session.to_string()),
                ],
            )],
            "programs" => self
                .programs
                .values()
                .map(|p| {
                    DumpRow::new(
                        "programs",
                        p.p_id,
                        vec![
                            ("name", p.name.clone()),
                            ("session", p.session.to_string()),
                            ("semesters", p.semester_count.to_string()),
                        ],
                    )
                })
                .collect(),
            "results" => self
                .results
                .values()
                .map(|r| {
                    DumpRow::new(
                        "results",
                        format!("{}:{}:{}", r.student_id, r.class_id, r.subject),
                        vec![
                            ("student_id", r.student_id.to_string()),
                            ("class_id", r.class_id.to_string()),
                            ("subject", r.subject.clone()),
                            ("marks", r.marks.to_string()),
                            ("year", r.year.to_string()),
                        ],
                    )
                })
                .collect(),
            "sessions" => self
                .sessions
                .iter()
                .map(|(id, dpt)| DumpRow::new("sessions", id, vec![("dpt", dpt.clone())]))
                .collect(),
            "students" => self
                .students
                .values()
                .map(|s| {
                    DumpRow::new(
                        "students",
                        s.student_id,
                        vec![
                            ("st_id", s.st_id.clone()),
                            ("name", s.name.clone()),
                            ("dpt", s.dpt_id.clone()),
                            ("program_id", opt(s.program_id)),
                            ("year", opt(s.admitted_year)),
                        ],
                    )
                })
                .collect(),
            "teachers" => self
                .teachers
                .values()
                .map(|t| {
                    DumpRow::new(
                        "teachers",
                        t.teacher_id,
                        vec![
                            ("name", t.name.clone()),
                            ("designation", t.designation.clone()),
                            ("contact", t.contact.clone()),
                            ("email", t.email.clone()),
                        ],
                    )
                })
                .collect(),
            _ => Vec::new(),
        }
    }

    pub fn dump(&self) -> StoreDump {
        StoreDump {
            rows: TABLES.iter().flat_map(|t| self.table_rows(t)).collect(),
        }
    }
}

/// Identifiers returned to the requester for an accepted change.
fn reply_args(change: &Change) -> Vec<Term> {
    match change {
        Change::SessionOpened { session, .. } | Change::SessionClosed { session } => {
            vec![Term::Int(*session)]
        }
        Change::StudentAdded(s) => vec![Term::Int(s.student_id)],
        Change::TeacherAdded(t) => vec![Term::Int(t.teacher_id)],
        Change::Admitted {
            student_id, p_id, ..
        } => vec![Term::Int(*student_id), Term::Int(*p_id)],
        Change::ProgramAdded { program, .. } => vec![Term::Int(program.p_id)],
        Change::ClassAdded(c) => vec![Term::Int(c.class_id)],
        Change::TeacherAssigned {
            class_id,
            teacher_id,
        } => vec![Term::Int(*class_id), Term::Int(*teacher_id)],
        Change::LectureDelivered {
            class_id, count, ..
        } => vec![Term::Int(*class_id), Term::Int(*count)],
        Change::ExamScheduled(e) => vec![Term::Int(e.class_id)],
        Change::ResultRecorded(r) => vec![Term::Int(r.student_id), Term::Int(r.class_id)],
    }
}
