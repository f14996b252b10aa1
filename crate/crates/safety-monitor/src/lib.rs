//! Runtime verification over the trace.
//!
//! [`Monitor`] consumes events one at a time and keeps just enough shadow
//! state to judge each accepted change. [`batch::evaluate`] recomputes the
//! same verdicts from a complete event list and is used to check the
//! incremental monitor and to re-evaluate saved traces.
//!
//! Properties are judged on accepted changes only. A refusal is the system
//! doing its job.

pub mod batch;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use thiserror::Error;

use agent_runtime::trace::{TraceEvent, TracePayload};
use bdi_kernel::codec::escape;
use bdi_kernel::message::{Envelope, Performative};
use bdi_kernel::term::Atom;
use ims_store::dump::StoreDump;
use ims_store::event::Change;
use ims_store::model::Timing;
use ims_store::{MarksPolicy, ReportKind, StoreConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PropertyId {
    P1,
    P2,
    P3,
    P4,
    P5,
    P6,
    P7,
    P8,
    P9,
    P10,
    P11,
    P12,
}

impl PropertyId {
    pub const ALL: [PropertyId; 12] = [
        PropertyId::P1,
        PropertyId::P2,
        PropertyId::P3,
        PropertyId::P4,
        PropertyId::P5,
        PropertyId::P6,
        PropertyId::P7,
        PropertyId::P8,
        PropertyId::P9,
        PropertyId::P10,
        PropertyId::P11,
        PropertyId::P12,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            PropertyId::P1 => "registration-uniqueness",
            PropertyId::P2 => "scalability-cap",
            PropertyId::P3 => "access-roster",
            PropertyId::P4 => "duplicate-admission",
            PropertyId::P5 => "fee-sync",
            PropertyId::P6 => "time-conflict",
            PropertyId::P7 => "term-thresholds",
            PropertyId::P8 => "datesheet-conflict",
            PropertyId::P9 => "completeness",
            PropertyId::P10 => "marks-bounds",
            PropertyId::P11 => "report-not-null",
            PropertyId::P12 => "bounded-liveness",
        }
    }
}

impl fmt::Display for PropertyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.index() + 1)
    }
}

impl FromStr for PropertyId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let n: usize = s
            .strip_prefix(['P', 'p'])
            .and_then(|n| n.parse().ok())
            .ok_or_else(|| format!("unknown property `{s}`"))?;
        PropertyId::ALL
            .get(n.wrapping_sub(1))
            .copied()
            .ok_or_else(|| format!("unknown property `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Holds,
    Violated,
    /// Only for liveness on a truncated trace.
    Inconclusive,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Holds => "holds",
            Status::Violated => "violated",
            Status::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub seq: u64,
    pub explanation: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub property: PropertyId,
    pub status: Status,
    pub witness: Option<Witness>,
}

impl Verdict {
    pub fn holds(property: PropertyId) -> Self {
        Verdict {
            property,
            status: Status::Holds,
            witness: None,
        }
    }

    fn from_witness(property: PropertyId, witness: Option<Witness>) -> Self {
        Verdict {
            property,
            status: if witness.is_some() {
                Status::Violated
            } else {
                Status::Holds
            },
            witness,
        }
    }

    /// `property|status|witness_seq|explanation`, `-` for absent fields.
    pub fn to_line(&self) -> String {
        let (seq, why) = match &self.witness {
            Some(w) => (w.seq.to_string(), escape(&w.explanation)),
            None => ("-".into(), "-".into()),
        };
        format!("{}|{}|{}|{}", self.property, self.status.as_str(), seq, why)
    }
}

pub fn any_violated(verdicts: &[Verdict]) -> bool {
    verdicts.iter().any(|v| v.status == Status::Violated)
}

/// Constants the properties are judged against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonitorConfig {
    pub cap: usize,
    pub roster: BTreeSet<String>,
    pub min_lectures_mid: i64,
    pub min_lectures_final: i64,
    pub marks: MarksPolicy,
    /// Rounds within which every request must be answered.
    pub liveness_k: u64,
}

impl MonitorConfig {
    pub fn new(store: &StoreConfig, liveness_k: u64) -> Self {
        MonitorConfig {
            cap: store.cap,
            roster: store.cs_roster.clone(),
            min_lectures_mid: store.min_lectures_mid,
            min_lectures_final: store.min_lectures_final,
            marks: store.marks.clone(),
            liveness_k,
        }
    }

    fn threshold(&self, term: ims_store::model::ExamTerm) -> i64 {
        match term {
            ims_store::model::ExamTerm::Mid => self.min_lectures_mid,
            ims_store::model::ExamTerm::Final => self.min_lectures_final,
        }
    }
}

impl Default for MonitorConfig {
    fn default() -> Self {
        MonitorConfig::new(&StoreConfig::default(), 100)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MonitorError {
    #[error("trace event out of order: expected seq {expected}, got {found}")]
    OutOfOrder { expected: u64, found: u64 },
}

/// Explanation texts, shared so both evaluators word findings identically.
pub mod explain {
    use super::*;

    pub fn p1(st_id: &str) -> String {
        format!("st_id {st_id} registered twice")
    }
    pub fn p2(open: usize, cap: usize) -> String {
        format!("session opened with {open} of {cap} already open")
    }
    pub fn p3(dpt: &str) -> String {
        format!("department {dpt} is not on the roster")
    }
    pub fn p4(student: i64) -> String {
        format!("student {student} admitted twice")
    }
    pub fn p5_event(p_id: i64, rows: i64, semesters: i64) -> String {
        format!("program {p_id} stored with {rows} fee rows for {semesters} semesters")
    }
    pub fn p5_state(p_id: &str, semester: i64) -> String {
        format!("program {p_id} semester {semester} has no fee row")
    }
    pub fn p6_cohort(class: i64, p_id: i64, semester: i64, t: Timing) -> String {
        format!(
            "class {class} takes slot {}/{} already used in program {p_id} semester {semester}",
            t.day, t.period
        )
    }
    pub fn p6_teacher(class: i64, teacher: i64, t: Timing) -> String {
        format!(
            "teacher {teacher} assigned to class {class} while teaching slot {}/{}",
            t.day, t.period
        )
    }
    pub fn p6_state(what: &str, key: &str, a: &str, b: &str) -> String {
        format!("{what} {key} shared by classes {a} and {b}")
    }
    pub fn p7(term: &str, class: i64, subject: &str, delivered: i64, needed: i64) -> String {
        format!(
            "{term} exam for class {class} {subject} after {delivered} lectures, needs {needed}"
        )
    }
    pub fn p8(class: &str, date: &str) -> String {
        format!("class {class} has two papers on {date}")
    }
    pub fn p9_event(change: &str, field: &str) -> String {
        format!("{change} stored with empty {field}")
    }
    pub fn p9_state(table: &str, pk: &str, field: &str) -> String {
        format!("{table} {pk} has empty {field}")
    }
    pub fn p10(marks: i64, subject: &str, min: i64, max: i64) -> String {
        format!("marks {marks} for {subject} outside {min}..={max}")
    }
    pub fn p11(conversation: &str) -> String {
        format!("report request {conversation} answered without a report")
    }
    pub fn p12_unanswered(conversation: &str) -> String {
        format!("request {conversation} never answered")
    }
    pub fn p12_pending(conversation: &str) -> String {
        format!("request {conversation} still pending when the trace ended")
    }
    pub fn p12_late(conversation: &str, latency: u64, k: u64) -> String {
        format!("request {conversation} answered after {latency} rounds, bound {k}")
    }
    pub fn p12_duplicate(conversation: &str) -> String {
        format!("request {conversation} answered more than once")
    }
    pub fn p12_orphan(conversation: &str) -> String {
        format!("reply {conversation} matches no request")
    }
}

/// True for `report(kind, label, value, ...)` with a known kind.
pub fn is_report(content: &Atom) -> bool {
    content.name == "report"
        && content.args.len() % 2 == 1
        && content.args[0]
            .as_str()
            .is_some_and(|k| k.parse::<ReportKind>().is_ok())
}

/// Table fields that must never be stored empty.
pub const REQUIRED_FIELDS: [(&str, &[&str]); 8] = [
    ("classes", &["subject"]),
    ("datesheet", &["subject"]),
    ("lectures", &["subject"]),
    ("programs", &["name"]),
    ("results", &["subject"]),
    ("sessions", &["dpt"]),
    ("students", &["st_id", "name", "dpt"]),
    ("teachers", &["name", "designation", "contact", "email"]),
];

/// State-level findings on a dump: the first problem for each of P5, P6,
/// P8 and P9.
pub fn snapshot_findings(dump: &StoreDump) -> Vec<(PropertyId, String)> {
    let mut out = Vec::new();

    let fee_keys: HashSet<&str> = dump.rows("fees").map(|r| r.pk.as_str()).collect();
    let p5 = dump.rows("programs").find_map(|p| {
        let n = p.int("semesters")?;
        (1..=n)
            .find(|s| !fee_keys.contains(format!("{}:{s}", p.pk).as_str()))
            .map(|s| explain::p5_state(&p.pk, s))
    });
    out.extend(p5.map(|e| (PropertyId::P5, e)));

    let mut cohort: BTreeMap<String, &str> = BTreeMap::new();
    let mut teacher: BTreeMap<String, &str> = BTreeMap::new();
    let mut p6 = None;
    for c in dump.rows("classes") {
        let slot = format!(
            "{}/{}",
            c.get("day").unwrap_or(""),
            c.get("period").unwrap_or("")
        );
        let ck = format!(
            "program {} semester {} slot {slot}",
            c.get("p_id").unwrap_or(""),
            c.get("semester").unwrap_or("")
        );
        if let Some(other) = cohort.insert(ck.clone(), &c.pk) {
            p6.get_or_insert_with(|| explain::p6_state("cohort", &ck, other, &c.pk));
        }
        let t = c.get("teacher_id").unwrap_or("");
        if !t.is_empty() {
            let tk = format!("{t} slot {slot}");
            if let Some(other) = teacher.insert(tk.clone(), &c.pk) {
                p6.get_or_insert_with(|| explain::p6_state("teacher", &tk, other, &c.pk));
            }
        }
    }
    out.extend(p6.map(|e| (PropertyId::P6, e)));

    let mut days = HashSet::new();
    let p8 = dump.rows("datesheet").find_map(|d| {
        let class = d.get("class_id").unwrap_or("");
        let date = d.get("date").unwrap_or("");
        (!days.insert((class, date))).then(|| explain::p8(class, date))
    });
    out.extend(p8.map(|e| (PropertyId::P8, e)));

    let p9 = REQUIRED_FIELDS.iter().find_map(|(table, fields)| {
        dump.rows(table).find_map(|r| {
            fields
                .iter()
                .find(|f| r.get(f).is_none_or(|v| v.trim().is_empty()))
                .map(|f| explain::p9_state(table, &r.pk, f))
        })
    });
    out.extend(p9.map(|e| (PropertyId::P9, e)));
    out
}

#[derive(Debug, Clone)]
struct Request {
    seq: u64,
    round: u64,
    conversation: String,
    verb: String,
    /// `(seq, round)` of each reply.
    replies: Vec<(u64, u64)>,
}

/// Incremental monitor.
#[derive(Debug, Clone)]
pub struct Monitor {
    config: MonitorConfig,
    next_seq: u64,
    last_round: u64,
    found: [Option<Witness>; 12],

    st_ids: HashSet<String>,
    open: BTreeSet<i64>,
    admitted: HashSet<i64>,
    classes: HashMap<i64, Timing>,
    cohort_slots: HashSet<(i64, i64, Timing)>,
    teacher_of: HashMap<i64, i64>,
    teacher_slots: HashMap<(i64, Timing), BTreeSet<i64>>,
    lectures: HashMap<(i64, String), i64>,
    exam_days: HashSet<(i64, NaiveDate)>,

    requests: Vec<Request>,
    /// `(conversation, requester)` to index in `requests`.
    open_requests: HashMap<(String, String), usize>,
    orphans: Vec<(u64, String)>,
}

impl Monitor {
    pub fn new(config: MonitorConfig) -> Self {
        Monitor {
            config,
            next_seq: 0,
            last_round: 0,
            found: Default::default(),
            st_ids: HashSet::new(),
            open: BTreeSet::new(),
            admitted: HashSet::new(),
            classes: HashMap::new(),
            cohort_slots: HashSet::new(),
            teacher_of: HashMap::new(),
            teacher_slots: HashMap::new(),
            lectures: HashMap::new(),
            exam_days: HashSet::new(),
            requests: Vec::new(),
            open_requests: HashMap::new(),
            orphans: Vec::new(),
        }
    }

    pub fn config(&self) -> &MonitorConfig {
        &self.config
    }

    fn flag(&mut self, p: PropertyId, seq: u64, explanation: String) {
        let slot = &mut self.found[p.index()];
        if slot.is_none() {
            *slot = Some(Witness { seq, explanation });
        }
    }

    /// Current status of a safety property.
    pub fn status(&self, p: PropertyId) -> Status {
        if self.found[p.index()].is_some() {
            Status::Violated
        } else {
            Status::Holds
        }
    }

    pub fn observe(&mut self, ev: &TraceEvent) -> Result<(), MonitorError> {
        if ev.seq != self.next_seq {
            return Err(MonitorError::OutOfOrder {
                expected: self.next_seq,
                found: ev.seq,
            });
        }
        self.next_seq += 1;
        self.last_round = self.last_round.max(ev.round);
        match &ev.payload {
            TracePayload::Envelope(env) => self.observe_envelope(ev, env),
            TracePayload::Domain { event, .. } => self.observe_change(ev.seq, &event.change),
            TracePayload::Refusal { .. } => {}
            TracePayload::Snapshot(dump) => {
                for (p, why) in snapshot_findings(dump) {
                    self.flag(p, ev.seq, why);
                }
            }
        }
        Ok(())
    }

    fn observe_envelope(&mut self, ev: &TraceEvent, env: &Envelope) {
        if env.performative == Performative::Request {
            self.open_requests.insert(
                (env.conversation.clone(), env.sender.to_string()),
                self.requests.len(),
            );
            self.requests.push(Request {
                seq: ev.seq,
                round: ev.round,
                conversation: env.conversation.clone(),
                verb: env.content.name.clone(),
                replies: Vec::new(),
            });
            return;
        }
        let key = (env.conversation.clone(), env.receiver.to_string());
        let Some(&i) = self.open_requests.get(&key) else {
            self.orphans.push((ev.seq, env.conversation.clone()));
            return;
        };
        self.requests[i].replies.push((ev.seq, ev.round));
        if self.requests[i].verb == "generate_report"
            && env.performative == Performative::Inform
            && !is_report(&env.content)
        {
            self.flag(PropertyId::P11, ev.seq, explain::p11(&env.conversation));
        }
    }

    fn observe_change(&mut self, seq: u64, change: &Change) {
        use PropertyId::*;
        if let Some(field) = change.empty_required_field() {
            self.flag(P9, seq, explain::p9_event(change.name(), field));
        }
        match change {
            Change::SessionOpened { session, dpt_id } => {
                if !self.config.roster.contains(dpt_id) {
                    self.flag(P3, seq, explain::p3(dpt_id));
                }
                if self.open.len() >= self.config.cap {
                    self.flag(P2, seq, explain::p2(self.open.len(), self.config.cap));
                }
                self.open.insert(*session);
            }
            Change::SessionClosed { session } => {
                self.open.remove(session);
            }
            Change::StudentAdded(s) => {
                if !self.st_ids.insert(s.st_id.clone()) {
                    self.flag(P1, seq, explain::p1(&s.st_id));
                }
            }
            Change::TeacherAdded(_) => {}
            Change::Admitted { student_id, .. } => {
                if !self.admitted.insert(*student_id) {
                    self.flag(P4, seq, explain::p4(*student_id));
                }
            }
            Change::ProgramAdded {
                program, fee_rows, ..
            } => {
                if *fee_rows != program.semester_count {
                    self.flag(
                        P5,
                        seq,
                        explain::p5_event(program.p_id, *fee_rows, program.semester_count),
                    );
                }
            }
            Change::ClassAdded(c) => {
                if !self.cohort_slots.insert((c.p_id, c.semester, c.timing)) {
                    self.flag(
                        P6,
                        seq,
                        explain::p6_cohort(c.class_id, c.p_id, c.semester, c.timing),
                    );
                }
                self.classes.insert(c.class_id, c.timing);
                self.lectures
                    .entry((c.class_id, c.subject.clone()))
                    .or_insert(0);
            }
            Change::TeacherAssigned {
                class_id,
                teacher_id,
            } => {
                let Some(&timing) = self.classes.get(class_id) else {
                    return;
                };
                if let Some(old) = self.teacher_of.insert(*class_id, *teacher_id) {
                    if let Some(set) = self.teacher_slots.get_mut(&(old, timing)) {
                        set.remove(class_id);
                    }
                }
                let set = self.teacher_slots.entry((*teacher_id, timing)).or_default();
                let clash = set.iter().any(|c| c != class_id);
                set.insert(*class_id);
                if clash {
                    self.flag(P6, seq, explain::p6_teacher(*class_id, *teacher_id, timing));
                }
            }
            Change::LectureDelivered {
                class_id,
                subject,
                count,
            } => {
                *self
                    .lectures
                    .entry((*class_id, subject.clone()))
                    .or_insert(0) += count;
            }
            Change::ExamScheduled(e) => {
                let delivered = self
                    .lectures
                    .get(&(e.class_id, e.subject.clone()))
                    .copied()
                    .unwrap_or(0);
                let needed = self.config.threshold(e.term);
                if delivered < needed {
                    self.flag(
                        P7,
                        seq,
                        explain::p7(
                            &e.term.to_string(),
                            e.class_id,
                            &e.subject,
                            delivered,
                            needed,
                        ),
                    );
                }
                if !self.exam_days.insert((e.class_id, e.date)) {
                    self.flag(
                        P8,
                        seq,
                        explain::p8(
                            &e.class_id.to_string(),
                            &e.date.format("%Y-%m-%d").to_string(),
                        ),
                    );
                }
            }
            Change::ResultRecorded(r) => {
                if !self.config.marks.admits(&r.subject, r.marks) {
                    let (min, max) = self.config.marks.bounds(&r.subject);
                    self.flag(P10, seq, explain::p10(r.marks, &r.subject, min, max));
                }
            }
        }
    }

    /// State-level verdicts for P5, P6, P8 and P9 on `dump`, without
    /// recording anything. Witness seqs point at the last observed event.
    pub fn check_snapshot(&self, dump: &StoreDump) -> Vec<Verdict> {
        let findings = snapshot_findings(dump);
        let at = self.next_seq.saturating_sub(1);
        [
            PropertyId::P5,
            PropertyId::P6,
            PropertyId::P8,
            PropertyId::P9,
        ]
        .into_iter()
        .map(|p| {
            Verdict::from_witness(
                p,
                findings
                    .iter()
                    .find(|(q, _)| *q == p)
                    .map(|(_, why)| Witness {
                        seq: at,
                        explanation: why.clone(),
                    }),
            )
        })
        .collect()
    }

    /// Largest request-to-first-reply distance seen, in rounds.
    pub fn max_latency(&self) -> u64 {
        self.requests
            .iter()
            .filter_map(|r| r.replies.first().map(|&(_, round)| round - r.round))
            .max()
            .unwrap_or(0)
    }

    /// All twelve verdicts. `complete` is false when the run stopped at its
    /// round bound with work pending.
    pub fn finalize(&self, complete: bool) -> Vec<Verdict> {
        let mut out: Vec<Verdict> = PropertyId::ALL[..11]
            .iter()
            .map(|&p| Verdict::from_witness(p, self.found[p.index()].clone()))
            .collect();
        out.push(self.liveness(complete));
        out
    }

    fn liveness(&self, complete: bool) -> Verdict {
        let k = self.config.liveness_k;
        let mut violation: Option<Witness> = None;
        let mut pending: Option<Witness> = None;
        let keep_min = |slot: &mut Option<Witness>, seq: u64, explanation: String| {
            if slot.as_ref().is_none_or(|w| seq < w.seq) {
                *slot = Some(Witness { seq, explanation });
            }
        };
        for r in &self.requests {
            match r.replies.as_slice() {
                [] if !complete && self.last_round - r.round <= k => {
                    keep_min(&mut pending, r.seq, explain::p12_pending(&r.conversation))
                }
                [] => keep_min(
                    &mut violation,
                    r.seq,
                    explain::p12_unanswered(&r.conversation),
                ),
                [(seq, round), rest @ ..] => {
                    if round - r.round > k {
                        keep_min(
                            &mut violation,
                            *seq,
                            explain::p12_late(&r.conversation, round - r.round, k),
                        );
                    }
                    if let Some((dup, _)) = rest.first() {
                        keep_min(
                            &mut violation,
                            *dup,
                            explain::p12_duplicate(&r.conversation),
                        );
                    }
                }
            }
        }
        for (seq, conv) in &self.orphans {
            keep_min(&mut violation, *seq, explain::p12_orphan(conv));
        }
        match (violation, pending) {
            (Some(w), _) => Verdict::from_witness(PropertyId::P12, Some(w)),
            (None, Some(w)) => Verdict {
                property: PropertyId::P12,
                status: Status::Inconclusive,
                witness: Some(w),
            },
            (None, None) => Verdict::holds(PropertyId::P12),
        }
    }
}
