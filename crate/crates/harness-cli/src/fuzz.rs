//! Seeded, model-based scenario generation.
//!
//! The generator runs closed-loop: each command is submitted before the next
//! one is drawn, and accepted replies update a small model of what exists.
//! Draws lean toward boundary cases: reused identities, occupied slots,
//! lecture totals around the term thresholds and marks around the bounds.

use std::collections::BTreeMap;

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::run::{CommandOutcome, Driver, RunError, RunOptions, RunResult};
use super::scenario::{ScenarioCommand, Verb};
use ims_store::ReportKind;

const MARKS: [i64; 7] = [-1, 0, 1, 50, 99, 100, 101];
const LECTURE_STEPS: [i64; 6] = [1, 15, 16, 31, 32, 5];
const DEPTS: [&str; 3] = ["CS", "IT", "EE"];
const SUBJECTS: [&str; 5] = ["Programming", "Calculus", "Physics", "Databases", "Lab"];
const DATES: [&str; 6] = [
    "2024-03-01",
    "2024-03-02",
    "2024-03-04",
    "2024-06-01",
    "2024-06-03",
    "2024-06-04",
];

const WEIGHTS: [(Verb, u32); 12] = [
    (Verb::OpenSession, 2),
    (Verb::CloseSession, 1),
    (Verb::RegisterStudent, 12),
    (Verb::RegisterTeacher, 5),
    (Verb::Admit, 10),
    (Verb::AddProgram, 3),
    (Verb::AddClass, 8),
    (Verb::AssignTeacher, 8),
    (Verb::DeliverLecture, 16),
    (Verb::ScheduleExam, 10),
    (Verb::RecordResult, 14),
    (Verb::GenerateReport, 3),
];

#[derive(Debug, Clone, Copy)]
struct Class {
    id: i64,
    program: i64,
    semester: i64,
    day: i64,
    period: i64,
}

/// What the generator believes exists, learned from accepted replies.
#[derive(Debug, Default)]
struct Model {
    sessions: Vec<i64>,
    st_ids: Vec<String>,
    students: Vec<i64>,
    admitted: Vec<i64>,
    emails: Vec<String>,
    teachers: Vec<i64>,
    busy_teachers: Vec<i64>,
    programs: Vec<(i64, i64)>,
    classes: Vec<Class>,
    lectures: BTreeMap<(i64, String), i64>,
    next_st: u64,
    next_email: u64,
}

struct Generator {
    rng: ChaCha8Rng,
    verbs: WeightedIndex<u32>,
    dup_pct: u32,
    slot_pct: u32,
    model: Model,
}

fn cmd(verb: Verb, args: &[(&str, String)]) -> ScenarioCommand {
    let args: Vec<(&str, &str)> = args.iter().map(|(k, v)| (*k, v.as_str())).collect();
    ScenarioCommand::new(verb, &args)
}

impl Generator {
    fn new(seed: u64, dup_pct: u32, slot_pct: u32) -> Self {
        Generator {
            rng: ChaCha8Rng::seed_from_u64(seed),
            verbs: WeightedIndex::new(WEIGHTS.iter().map(|(_, w)| *w)).expect("weights"),
            dup_pct,
            slot_pct,
            model: Model::default(),
        }
    }

    fn pct(&mut self, p: u32) -> bool {
        self.rng.gen_range(0..100) < p
    }

    fn pick<T: Clone>(&mut self, xs: &[T]) -> Option<T> {
        xs.choose(&mut self.rng).cloned()
    }

    /// Text field: occasionally empty to exercise completeness.
    fn text(&mut self, v: impl Into<String>) -> String {
        if self.pct(5) {
            String::new()
        } else {
            v.into()
        }
    }

    /// An existing id, or now and then one that does not exist.
    fn id(&mut self, known: &[i64]) -> String {
        match self.pick(known) {
            Some(id) if !self.pct(10) => id.to_string(),
            _ => (known.iter().max().unwrap_or(&0) + 1 + self.rng.gen_range(0..3)).to_string(),
        }
    }

    fn next(&mut self) -> ScenarioCommand {
        if self.model.sessions.is_empty() {
            return cmd(Verb::OpenSession, &[("dept", "CS".into())]);
        }
        loop {
            let verb = WEIGHTS[self.verbs.sample(&mut self.rng)].0;
            if let Some(c) = self.draw(verb) {
                return c;
            }
        }
    }

    fn draw(&mut self, verb: Verb) -> Option<ScenarioCommand> {
        let dup = self.dup_pct;
        let slot = self.slot_pct;
        Some(match verb {
            Verb::OpenSession => {
                let dept = if self.pct(80) {
                    "CS"
                } else {
                    self.pick(&DEPTS)?
                };
                cmd(verb, &[("dept", dept.into())])
            }
            Verb::CloseSession => {
                if self.model.sessions.len() < 2 {
                    return None;
                }
                let s = self.pick(&self.model.sessions.clone())?;
                cmd(verb, &[("session", s.to_string())])
            }
            Verb::RegisterStudent => {
                let st_id = match self.pick(&self.model.st_ids.clone()) {
                    Some(s) if self.pct(dup) => s,
                    _ => {
                        self.model.next_st += 1;
                        format!("{}", 1000 + self.model.next_st)
                    }
                };
                let st_id = self.text(st_id);
                let n = self.rng.gen_range(0..100);
                let name = self.text(format!("s{n}"));
                let dept = self.text("CS");
                cmd(verb, &[("st_id", st_id), ("name", name), ("dept", dept)])
            }
            Verb::RegisterTeacher => {
                let email = match self.pick(&self.model.emails.clone()) {
                    Some(e) if self.pct(dup) => e,
                    _ => {
                        self.model.next_email += 1;
                        format!("t{}@uni.edu", self.model.next_email)
                    }
                };
                let name = self.text("T");
                let designation = self.text("Lecturer");
                let contact = self.text("0300");
                cmd(
                    verb,
                    &[
                        ("name", name),
                        ("designation", designation),
                        ("contact", contact),
                        ("email", email),
                    ],
                )
            }
            Verb::Admit => {
                if self.model.programs.is_empty() {
                    return None;
                }
                let student = match self.pick(&self.model.admitted.clone()) {
                    Some(s) if self.pct(dup) => s.to_string(),
                    _ => self.id(&self.model.students.clone()),
                };
                let programs: Vec<i64> = self.model.programs.iter().map(|p| p.0).collect();
                let program = self.id(&programs);
                let year = self.rng.gen_range(1..=3).to_string();
                cmd(
                    verb,
                    &[("student", student), ("program", program), ("year", year)],
                )
            }
            Verb::AddProgram => {
                let semesters = self.rng.gen_range(1..=8);
                let name = self.text(format!("P{}", self.model.programs.len() + 1));
                let session = if self.pct(50) { "morning" } else { "evening" };
                cmd(
                    verb,
                    &[
                        ("name", name),
                        ("session", session.into()),
                        ("semesters", semesters.to_string()),
                        ("fee", (self.rng.gen_range(1..=9) * 10_000).to_string()),
                    ],
                )
            }
            Verb::AddClass => {
                let (program, semester, day, period) = match self.pick(&self.model.classes.clone())
                {
                    Some(c) if self.pct(slot) => (c.program, c.semester, c.day, c.period),
                    _ => {
                        let (p, sems) = self.pick(&self.model.programs.clone())?;
                        (
                            p,
                            self.rng.gen_range(1..=sems),
                            self.rng.gen_range(0..5),
                            self.rng.gen_range(0..8),
                        )
                    }
                };
                let subject = self.pick(&SUBJECTS)?;
                let subject = self.text(subject);
                cmd(
                    verb,
                    &[
                        ("program", program.to_string()),
                        ("semester", semester.to_string()),
                        ("subject", subject),
                        ("day", day.to_string()),
                        ("period", period.to_string()),
                    ],
                )
            }
            Verb::AssignTeacher => {
                if self.model.classes.is_empty() || self.model.teachers.is_empty() {
                    return None;
                }
                let teacher = match self.pick(&self.model.busy_teachers.clone()) {
                    Some(t) if self.pct(slot) => t.to_string(),
                    _ => self.id(&self.model.teachers.clone()),
                };
                let classes: Vec<i64> = self.model.classes.iter().map(|c| c.id).collect();
                let class = self.id(&classes);
                cmd(verb, &[("class", class), ("teacher", teacher)])
            }
            Verb::DeliverLecture => {
                let c = self.pick(&self.model.classes.clone())?;
                let subject = self.pick(&SUBJECTS)?.to_string();
                let have = self
                    .model
                    .lectures
                    .get(&(c.id, subject.clone()))
                    .copied()
                    .unwrap_or(0);
                let target = self.pick(&LECTURE_STEPS[1..5])?;
                let count = if target > have && self.pct(60) {
                    target - have
                } else {
                    self.pick(&LECTURE_STEPS)?
                };
                cmd(
                    verb,
                    &[
                        ("class", c.id.to_string()),
                        ("subject", subject),
                        ("count", count.to_string()),
                    ],
                )
            }
            Verb::ScheduleExam => {
                let logs: Vec<(i64, String)> = self.model.lectures.keys().cloned().collect();
                let (class, subject) = match self.pick(&logs) {
                    Some(l) if !self.pct(10) => l,
                    _ => {
                        let c = self.pick(&self.model.classes.clone())?;
                        (c.id, self.pick(&SUBJECTS)?.to_string())
                    }
                };
                let term = if self.pct(50) { "mid" } else { "final" };
                // Few dates, so date clashes come up on their own.
                let date = if self.pct(slot) {
                    DATES[0]
                } else {
                    self.pick(&DATES)?
                };
                cmd(
                    verb,
                    &[
                        ("term", term.into()),
                        ("class", class.to_string()),
                        ("subject", subject),
                        ("date", date.into()),
                    ],
                )
            }
            Verb::RecordResult => {
                let c = self.pick(&self.model.classes.clone())?;
                let student = match self.pick(&self.model.admitted.clone()) {
                    Some(s) if !self.pct(10) => s.to_string(),
                    _ => self.id(&self.model.students.clone()),
                };
                let marks = if self.pct(50) {
                    self.pick(&MARKS)?
                } else {
                    self.rng.gen_range(0..=100)
                };
                let subject = self.pick(&SUBJECTS)?;
                let subject = self.text(subject);
                cmd(
                    verb,
                    &[
                        ("student", student),
                        ("class", c.id.to_string()),
                        ("subject", subject),
                        ("marks", marks.to_string()),
                        ("year", self.rng.gen_range(1..=3).to_string()),
                    ],
                )
            }
            Verb::GenerateReport => {
                let kind = self.pick(&ReportKind::ALL)?;
                cmd(verb, &[("kind", kind.as_str().into())])
            }
            Verb::Crash | Verb::ExpectRefusal => return None,
        })
    }

    fn learn(&mut self, c: &ScenarioCommand, o: &CommandOutcome) {
        let Some(id) = o.id() else { return };
        let int = |k: &str| c.get(k).and_then(|v| v.parse::<i64>().ok()).unwrap_or(0);
        let m = &mut self.model;
        match c.verb {
            Verb::OpenSession => m.sessions.push(id),
            Verb::CloseSession => m.sessions.retain(|s| *s != id),
            Verb::RegisterStudent => {
                m.students.push(id);
                m.st_ids
                    .push(c.get("st_id").unwrap_or_default().to_string());
            }
            Verb::RegisterTeacher => {
                m.teachers.push(id);
                m.emails
                    .push(c.get("email").unwrap_or_default().to_string());
            }
            Verb::Admit => m.admitted.push(id),
            Verb::AddProgram => m.programs.push((id, int("semesters"))),
            Verb::AddClass => m.classes.push(Class {
                id,
                program: int("program"),
                semester: int("semester"),
                day: int("day"),
                period: int("period"),
            }),
            Verb::AssignTeacher => m.busy_teachers.push(int("teacher")),
            Verb::DeliverLecture => {
                let key = (id, c.get("subject").unwrap_or_default().to_string());
                *m.lectures.entry(key).or_default() += int("count");
            }
            _ => {}
        }
    }
}

#[derive(Debug, Clone)]
pub struct FuzzRun {
    pub result: RunResult,
    pub commands: Vec<ScenarioCommand>,
}

/// Generate and run `n_events` commands. The seed in `opts.config` is
/// replaced by `seed` so the trace header names it.
pub fn fuzz(seed: u64, n_events: usize, mut opts: RunOptions) -> Result<FuzzRun, RunError> {
    opts.config.seed = seed;
    let mut generator = Generator::new(
        seed,
        opts.config.fuzz_duplicate_pct,
        opts.config.fuzz_slot_pct,
    );
    let mut driver = Driver::new(opts);
    let mut commands = Vec::with_capacity(n_events);
    for line in 1..=n_events {
        let mut c = generator.next();
        c.line = line;
        if let Some(outcome) = driver.submit(&c)? {
            generator.learn(&c, &outcome);
        }
        commands.push(c);
    }
    Ok(FuzzRun {
        result: driver.finish()?,
        commands,
    })
}
