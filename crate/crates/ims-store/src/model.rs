//! Table rows.

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StudentRecord {
    /// National identity number; unique.
    pub st_id: String,
    pub student_id: i64,
    pub name: String,
    pub dpt_id: String,
    pub program_id: Option<i64>,
    /// Academic year of admission, set together with `program_id`.
    pub admitted_year: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TeacherRecord {
    pub teacher_id: i64,
    pub name: String,
    pub designation: String,
    pub contact: String,
    pub email: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SessionKind {
    Morning,
    Evening,
}

impl fmt::Display for SessionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SessionKind::Morning => "morning",
            SessionKind::Evening => "evening",
        })
    }
}

impl FromStr for SessionKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "morning" => Ok(SessionKind::Morning),
            "evening" => Ok(SessionKind::Evening),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub p_id: i64,
    pub name: String,
    pub session: SessionKind,
    pub semester_count: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeeStructure {
    pub p_id: i64,
    pub semester: i64,
    pub amount: i64,
}

/// Discrete weekly slot: weekday 0..=4, period 0..=7.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timing {
    pub day: i64,
    pub period: i64,
}

impl Timing {
    pub const DAYS: i64 = 5;
    pub const PERIODS: i64 = 8;

    pub fn is_valid(self) -> bool {
        (0..Self::DAYS).contains(&self.day) && (0..Self::PERIODS).contains(&self.period)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassSection {
    pub class_id: i64,
    pub p_id: i64,
    pub semester: i64,
    pub subject: String,
    pub timing: Timing,
    pub teacher_id: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LectureLog {
    pub class_id: i64,
    pub subject: String,
    pub lectures_delivered: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExamTerm {
    Mid,
    Final,
}

impl fmt::Display for ExamTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExamTerm::Mid => "mid",
            ExamTerm::Final => "final",
        })
    }
}

impl FromStr for ExamTerm {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "mid" => Ok(ExamTerm::Mid),
            "final" => Ok(ExamTerm::Final),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatesheetEntry {
    pub term: ExamTerm,
    pub date: NaiveDate,
    pub class_id: i64,
    pub subject: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultRecord {
    pub student_id: i64,
    pub class_id: i64,
    pub subject: String,
    pub marks: i64,
    pub year: i64,
}

/// Parse the calendar day format used everywhere: `YYYY-MM-DD`.
pub fn parse_date(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").ok()
}
