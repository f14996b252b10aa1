//! Run configuration: `key = value` lines.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use ims_store::{Guard, MarksPolicy, StoreConfig};
use safety_monitor::{MonitorConfig, PropertyId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub cap: usize,
    pub min_lectures_mid: i64,
    pub min_lectures_final: i64,
    pub min_marks: i64,
    pub max_marks: i64,
    /// Per-subject `(min, max)` marks, from `marks.<subject> = min,max`.
    pub subject_marks: BTreeMap<String, (i64, i64)>,
    pub liveness_k: u64,
    pub seed: u64,
    /// Round budget for each scenario command.
    pub max_rounds: u64,
    pub lab_count: i64,
    pub cs_roster: BTreeSet<String>,
    /// Fuzzer: percent of identity fields drawn from already used values.
    pub fuzz_duplicate_pct: u32,
    /// Fuzzer: percent of slots drawn from already occupied ones.
    pub fuzz_slot_pct: u32,
}

impl Default for RunConfig {
    fn default() -> Self {
        let store = StoreConfig::default();
        RunConfig {
            cap: store.cap,
            min_lectures_mid: store.min_lectures_mid,
            min_lectures_final: store.min_lectures_final,
            min_marks: store.marks.min,
            max_marks: store.marks.max,
            subject_marks: BTreeMap::new(),
            liveness_k: 100,
            seed: 0,
            max_rounds: 50,
            lab_count: store.lab_count,
            cs_roster: store.cs_roster,
            fuzz_duplicate_pct: 30,
            fuzz_slot_pct: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("config line {line}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("`{key}` expects a number, got `{value}`"))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| ConfigError {
                line: i + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            cfg.set(key.trim(), value.trim()).map_err(err)?;
        }
        cfg.validate()
            .map_err(|message| ConfigError { line: 0, message })?;
        Ok(cfg)
    }

    /// Set one field. Unknown keys are errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "cap" => self.cap = num(key, value)?,
            "min_lectures_mid" => self.min_lectures_mid = num(key, value)?,
            "min_lectures_final" => self.min_lectures_final = num(key, value)?,
            "min_marks" => self.min_marks = num(key, value)?,
            "max_marks" => self.max_marks = num(key, value)?,
            "liveness_k" | "liveness_K" => self.liveness_k = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "max_rounds" => self.max_rounds = num(key, value)?,
            "lab_count" => self.lab_count = num(key, value)?,
            "fuzz_duplicate_pct" => self.fuzz_duplicate_pct = num(key, value)?,
            "fuzz_slot_pct" => self.fuzz_slot_pct = num(key, value)?,
            "cs_roster" => {
                self.cs_roster = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect()
            }
            _ => {
                let Some(subject) = key.strip_prefix("marks.") else {
                    return Err(format!("unknown key `{key}`"));
                };
                let (lo, hi) = value
                    .split_once(',')
                    .ok_or_else(|| format!("`{key}` expects `min,max`"))?;
                self.subject_marks.insert(
                    subject.to_string(),
                    (num(key, lo.trim())?, num(key, hi.trim())?),
                );
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("cap", self.cap as i64),
            ("min_lectures_mid", self.min_lectures_mid),
            ("min_lectures_final", self.min_lectures_final),
            ("liveness_k", self.liveness_k as i64),
            ("max_rounds", self.max_rounds as i64),
        ];
        if let Some((k, _)) = positive.iter().find(|(_, v)| *v < 1) {
            return Err(format!("`{k}` must be positive"));
        }
        if self.min_marks < 0 || self.max_marks < self.min_marks {
            return Err("marks bounds must satisfy 0 <= min_marks <= max_marks".into());
        }
        if let Some((s, _)) = self
            .subject_marks
            .iter()
            .find(|(_, (lo, hi))| *lo < 0 || hi < lo)
        {
            return Err(format!("bad marks bounds for `{s}`"));
        }
        if self.lab_count < 0 {
            return Err("`lab_count` must not be negative".into());
        }
        if self.fuzz_duplicate_pct + self.fuzz_slot_pct > 100 {
            return Err("fuzz percentages add up to more than 100".into());
        }
        Ok(())
    }

    pub fn store_config(&self, fault: Option<FaultFlag>) -> StoreConfig {
        StoreConfig {
            cap: self.cap,
            cs_roster: self.cs_roster.clone(),
            min_lectures_mid: self.min_lectures_mid,
            min_lectures_final: self.min_lectures_final,
            marks: MarksPolicy {
                min: self.min_marks,
                max: self.max_marks,
                per_subject: self.subject_marks.clone(),
            },
            lab_count: self.lab_count,
            disabled: fault.and_then(FaultFlag::guard).into_iter().collect(),
        }
    }

    pub fn monitor_config(&self) -> MonitorConfig {
        MonitorConfig::new(&self.store_config(None), self.liveness_k)
    }
}

/// Round-trips through [`RunConfig::parse`].
impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "cap = {}", self.cap)?;
        writeln!(f, "min_lectures_mid = {}", self.min_lectures_mid)?;
        writeln!(f, "min_lectures_final = {}", self.min_lectures_final)?;
        writeln!(f, "min_marks = {}", self.min_marks)?;
        writeln!(f, "max_marks = {}", self.max_marks)?;
        for (s, (lo, hi)) in &self.subject_marks {
            writeln!(f, "marks.{s} = {lo},{hi}")?;
        }
        writeln!(f, "liveness_k = {}", self.liveness_k)?;
        writeln!(f, "seed = {}", self.seed)?;
        writeln!(f, "max_rounds = {}", self.max_rounds)?;
        writeln!(f, "lab_count = {}", self.lab_count)?;
        let roster: Vec<&str> = self.cs_roster.iter().map(String::as_str).collect();
        writeln!(f, "cs_roster = {}", roster.join(","))?;
        writeln!(f, "fuzz_duplicate_pct = {}", self.fuzz_duplicate_pct)?;
        writeln!(f, "fuzz_slot_pct = {}", self.fuzz_slot_pct)
    }
}

/// Switches off the guard behind one safety property.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaultFlag(PropertyId);

impl FaultFlag {
    pub fn property(self) -> PropertyId {
        self.0
    }

    /// Store guard to disable. P11 is injected in the report agent instead.
    pub fn guard(self) -> Option<Guard> {
        use PropertyId::*;
        Some(match self.0 {
            P1 => Guard::RegistrationUnique,
            P2 => Guard::SessionCapacity,
            P3 => Guard::DepartmentRoster,
            P4 => Guard::DuplicateAdmission,
            P5 => Guard::FeeSync,
            P6 => Guard::TimeConflict,
            P7 => Guard::TermThreshold,
            P8 => Guard::DateConflict,
            P9 => Guard::Completeness,
            P10 => Guard::MarksBounds,
            P11 | P12 => return None,
        })
    }

    pub fn null_reports(self) -> bool {
        self.0 == PropertyId::P11
    }

    pub fn all() -> impl Iterator<Item = FaultFlag> {
        PropertyId::ALL[..11].iter().map(|&p| FaultFlag(p))
    }
}

impl FromStr for FaultFlag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let p: PropertyId = s.parse()?;
        if p == PropertyId::P12 {
            return Err("liveness has no fault flag".into());
        }
        Ok(FaultFlag(p))
    }
}

impl fmt::Display for FaultFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0.index() + 1)
    }
}
