//! Scenario files: one `VERB key=value ...` command per line.
//!
//! Values may be double-quoted to hold spaces, `#` or nothing at all
//! (`name=""`). Inside quotes `\"` and `\\` escape.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use bdi_kernel::term::Term;
use ims_store::ReportKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Verb {
    OpenSession,
    CloseSession,
    RegisterStudent,
    RegisterTeacher,
    Admit,
    AddProgram,
    AddClass,
    AssignTeacher,
    DeliverLecture,
    ScheduleExam,
    RecordResult,
    GenerateReport,
    Crash,
    ExpectRefusal,
}

/// One accepted key of a verb.
#[derive(Debug, Clone, Copy)]
pub struct Key {
    pub name: &'static str,
    /// `None` for required keys.
    pub default: Option<&'static str>,
    pub int: bool,
}

const fn req(name: &'static str) -> Key {
    Key {
        name,
        default: None,
        int: false,
    }
}

const fn req_int(name: &'static str) -> Key {
    Key {
        name,
        default: None,
        int: true,
    }
}

const fn opt_int(name: &'static str, default: &'static str) -> Key {
    Key {
        name,
        default: Some(default),
        int: true,
    }
}

/// Optional with no default: omitted entirely when absent.
const fn opt(name: &'static str, int: bool) -> Key {
    Key {
        name,
        default: Some(""),
        int,
    }
}

impl Verb {
    pub const ALL: [Verb; 14] = [
        Verb::OpenSession,
        Verb::CloseSession,
        Verb::RegisterStudent,
        Verb::RegisterTeacher,
        Verb::Admit,
        Verb::AddProgram,
        Verb::AddClass,
        Verb::AssignTeacher,
        Verb::DeliverLecture,
        Verb::ScheduleExam,
        Verb::RecordResult,
        Verb::GenerateReport,
        Verb::Crash,
        Verb::ExpectRefusal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Verb::OpenSession => "OPEN_SESSION",
            Verb::CloseSession => "CLOSE_SESSION",
            Verb::RegisterStudent => "REGISTER_STUDENT",
            Verb::RegisterTeacher => "REGISTER_TEACHER",
            Verb::Admit => "ADMIT",
            Verb::AddProgram => "ADD_PROGRAM",
            Verb::AddClass => "ADD_CLASS",
            Verb::AssignTeacher => "ASSIGN_TEACHER",
            Verb::DeliverLecture => "DELIVER_LECTURE",
            Verb::ScheduleExam => "SCHEDULE_EXAM",
            Verb::RecordResult => "RECORD_RESULT",
            Verb::GenerateReport => "GENERATE_REPORT",
            Verb::Crash => "CRASH",
            Verb::ExpectRefusal => "EXPECT_REFUSAL",
        }
    }

    /// Accepted keys, in the order the gateway passes them on.
    pub fn keys(self) -> &'static [Key] {
        match self {
            Verb::OpenSession => const { &[req("dept")] },
            Verb::CloseSession => const { &[opt("session", true)] },
            Verb::RegisterStudent => const { &[req("st_id"), req("name"), req("dept")] },
            Verb::RegisterTeacher => {
                const {
                    &[
                        req("name"),
                        req("designation"),
                        req("contact"),
                        req("email"),
                    ]
                }
            }
            Verb::Admit => {
                const { &[req_int("student"), req_int("program"), opt_int("year", "1")] }
            }
            Verb::AddProgram => {
                const {
                    &[
                        req("name"),
                        req("session"),
                        req_int("semesters"),
                        req_int("fee"),
                    ]
                }
            }
            Verb::AddClass => {
                const {
                    &[
                        req_int("program"),
                        req_int("semester"),
                        req("subject"),
                        req_int("day"),
                        req_int("period"),
                    ]
                }
            }
            Verb::AssignTeacher => const { &[req_int("class"), req_int("teacher")] },
            Verb::DeliverLecture => {
                const { &[req_int("class"), req("subject"), opt_int("count", "1")] }
            }
            Verb::ScheduleExam => {
                const { &[req("term"), req_int("class"), req("subject"), req("date")] }
            }
            Verb::RecordResult => {
                const {
                    &[
                        req_int("student"),
                        req_int("class"),
                        req("subject"),
                        req_int("marks"),
                        opt_int("year", "1"),
                    ]
                }
            }
            Verb::GenerateReport => const { &[req("kind")] },
            Verb::Crash => const { &[] },
            Verb::ExpectRefusal => const { &[opt("reason", false)] },
        }
    }

    /// Gateway goal name, `None` for harness directives.
    pub fn goal(self) -> Option<&'static str> {
        Some(match self {
            Verb::OpenSession => "open_session",
            Verb::CloseSession => "close_session",
            Verb::RegisterStudent => "register_student",
            Verb::RegisterTeacher => "register_teacher",
            Verb::Admit => "admit",
            Verb::AddProgram => "add_program",
            Verb::AddClass => "add_class",
            Verb::AssignTeacher => "assign_teacher",
            Verb::DeliverLecture => "deliver_lecture",
            Verb::ScheduleExam => "schedule_exam",
            Verb::RecordResult => "record_result",
            Verb::GenerateReport => "generate_report",
            Verb::Crash | Verb::ExpectRefusal => return None,
        })
    }
}

impl fmt::Display for Verb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Verb {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Verb::ALL.into_iter().find(|v| v.as_str() == s).ok_or(())
    }
}

/// Equality ignores `line`, so a printed and re-parsed list compares equal.
#[derive(Debug, Clone, Eq)]
pub struct ScenarioCommand {
    pub verb: Verb,
    pub args: Vec<(String, String)>,
    pub line: usize,
}

impl PartialEq for ScenarioCommand {
    fn eq(&self, other: &Self) -> bool {
        self.verb == other.verb && self.args == other.args
    }
}

impl ScenarioCommand {
    pub fn new(verb: Verb, args: &[(&str, &str)]) -> Self {
        ScenarioCommand {
            verb,
            args: args
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
            line: 0,
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.args
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Gateway goal parameters: keys in declaration order, defaults filled
    /// in, numeric keys as integers when they parse.
    pub fn goal_params(&self) -> Vec<Term> {
        let mut out = Vec::new();
        for key in self.verb.keys() {
            let value = match (self.get(key.name), key.default) {
                (Some(v), _) => v,
                (None, Some("")) | (None, None) => continue,
                (None, Some(d)) => d,
            };
            out.push(match value.trim().parse::<i64>() {
                Ok(n) if key.int => Term::Int(n),
                _ => Term::text(value),
            });
        }
        out
    }
}

fn needs_quotes(v: &str) -> bool {
    v.is_empty()
        || v.chars()
            .any(|c| c.is_whitespace() || matches!(c, '"' | '#' | '\\'))
}

fn quote(v: &str) -> String {
    if !needs_quotes(v) {
        return v.to_string();
    }
    let mut s = String::from("\"");
    for c in v.chars() {
        if matches!(c, '"' | '\\') {
            s.push('\\');
        }
        s.push(c);
    }
    s.push('"');
    s
}

impl fmt::Display for ScenarioCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.verb.as_str())?;
        for (k, v) in &self.args {
            write!(f, " {k}={}", quote(v))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

/// Split a line into tokens, honouring quotes and dropping a trailing
/// comment. Quoted spans are unescaped in place.
fn tokenize(line: &str) -> Result<Vec<String>, String> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    let mut in_token = false;
    let mut chars = line.chars();
    while let Some(c) = chars.next() {
        match c {
            '#' => break,
            '"' => {
                in_token = true;
                loop {
                    match chars.next() {
                        Some('"') => break,
                        Some('\\') => match chars.next() {
                            Some(e) => cur.push(e),
                            None => return Err("dangling escape".into()),
                        },
                        Some(other) => cur.push(other),
                        None => return Err("unterminated quote".into()),
                    }
                }
            }
            c if c.is_whitespace() => {
                if in_token {
                    tokens.push(std::mem::take(&mut cur));
                    in_token = false;
                }
            }
            c => {
                in_token = true;
                cur.push(c);
            }
        }
    }
    if in_token {
        tokens.push(cur);
    }
    Ok(tokens)
}

fn parse_line(line: &str, n: usize) -> Result<Option<ScenarioCommand>, ParseError> {
    let err = |message: String| ParseError { line: n, message };
    // Keys are never quoted, so splitting `key=` off the raw token is safe
    // as long as we tokenize first with quotes preserved.
    let tokens = tokenize_raw(line).map_err(err)?;
    let Some((verb_tok, rest)) = tokens.split_first() else {
        return Ok(None);
    };
    let verb: Verb = verb_tok
        .parse()
        .map_err(|_| err(format!("unknown verb `{verb_tok}`")))?;
    let keys = verb.keys();
    let mut args: Vec<(String, String)> = Vec::new();
    for tok in rest {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| err(format!("expected key=value, got `{tok}`")))?;
        if !keys.iter().any(|key| key.name == k) {
            return Err(err(format!("{verb} does not take `{k}`")));
        }
        if args.iter().any(|(seen, _)| seen == k) {
            return Err(err(format!("`{k}` given twice")));
        }
        let value = tokenize(v).map_err(err)?.pop().unwrap_or_default();
        args.push((k.to_string(), value));
    }
    if let Some(missing) = keys
        .iter()
        .find(|key| key.default.is_none() && !args.iter().any(|(k, _)| k == key.name))
    {
        return Err(err(format!("{verb} requires `{}`", missing.name)));
    }
    let cmd = ScenarioCommand {
        verb,
        args,
        line: n,
    };
    if verb == Verb::GenerateReport {
        let kind = cmd.get("kind").unwrap_or("");
        kind.parse::<ReportKind>().map_err(err)?;
    }
    Ok(Some(cmd))
}

/// Like [`tokenize`] but keeps quotes and escapes, so each `key=value`
/// token can be split before its value is unquoted.
fn tokenize_raw(line: &str) -> Result<Vec<String>, String> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    let mut chars = line.chars();
    while let Some(c) = chars.next() {
        match c {
            '#' => break,
            '"' => {
                cur.push('"');
                loop {
                    match chars.next() {
                        Some('"') => {
                            cur.push('"');
                            break;
                        }
                        Some('\\') => {
                            cur.push('\\');
                            cur.push(chars.next().ok_or("dangling escape")?);
                        }
                        Some(other) => cur.push(other),
                        None => return Err("unterminated quote".into()),
                    }
                }
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        tokens.push(cur);
    }
    Ok(tokens)
}

pub fn parse_scenario(text: &str) -> Result<Vec<ScenarioCommand>, ParseError> {
    let mut out: Vec<ScenarioCommand> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let Some(cmd) = parse_line(line, i + 1)? else {
            continue;
        };
        if cmd.verb == Verb::ExpectRefusal
            && out.last().is_none_or(|prev| prev.verb.goal().is_none())
        {
            return Err(ParseError {
                line: i + 1,
                message: "EXPECT_REFUSAL must follow a system command".into(),
            });
        }
        out.push(cmd);
    }
    Ok(out)
}

pub fn print_scenario(commands: &[ScenarioCommand]) -> String {
    commands.iter().map(|c| format!("{c}\n")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_and_comments() {
        assert_eq!(parse_scenario("").unwrap(), vec![]);
        assert_eq!(parse_scenario("# only\n\n   \n").unwrap(), vec![]);
    }

    #[test]
    fn one_command() {
        let cmds = parse_scenario("REGISTER_STUDENT st_id=111 name=Ali dept=CS").unwrap();
        assert_eq!(cmds.len(), 1);
        assert_eq!(cmds[0].verb, Verb::RegisterStudent);
        assert_eq!(cmds[0].get("name"), Some("Ali"));
        assert_eq!(cmds[0].line, 1);
    }

    #[test]
    fn quoted_values_and_trailing_comments() {
        let cmds = parse_scenario(
            "OPEN_SESSION dept=CS\nREGISTER_STUDENT st_id=1 name=\"Ali Khan # x\" dept=CS # note\nREGISTER_TEACHER name=T designation=\"\" contact=1 email=e",
        )
        .unwrap();
        assert_eq!(cmds[1].get("name"), Some("Ali Khan # x"));
        assert_eq!(cmds[2].get("designation"), Some(""));
    }

    #[test]
    fn errors_name_the_line() {
        let e = parse_scenario("OPEN_SESSION dept=CS\n\nFROB x=1").unwrap_err();
        assert_eq!(e.line, 3);
        assert!(e.message.contains("FROB"));
        let e = parse_scenario("REGISTER_STUDENT st_id=1 name=A").unwrap_err();
        assert!(e.message.contains("dept"), "{e}");
        assert!(parse_scenario("OPEN_SESSION dept=CS colour=red").is_err());
        assert!(parse_scenario("OPEN_SESSION dept=CS dept=IT").is_err());
        assert!(parse_scenario("OPEN_SESSION dept=\"CS").is_err());
        assert!(parse_scenario("GENERATE_REPORT kind=everything").is_err());
        assert!(parse_scenario("EXPECT_REFUSAL").is_err());
        assert!(parse_scenario("CRASH\nEXPECT_REFUSAL").is_err());
    }

    #[test]
    fn goal_params_fill_defaults_and_types() {
        let c = &parse_scenario("ADMIT student=1 program=2").unwrap()[0];
        assert_eq!(c.goal_params(), [Term::Int(1), Term::Int(2), Term::Int(1)]);
        let c = &parse_scenario("REGISTER_STUDENT st_id=007 name=A dept=CS").unwrap()[0];
        assert_eq!(c.goal_params()[0], Term::text("007"));
        let c = &parse_scenario("CLOSE_SESSION").unwrap()[0];
        assert!(c.goal_params().is_empty());
        let c = &parse_scenario("ADMIT student=x program=\"\"").unwrap()[0];
        assert_eq!(c.goal_params()[..2], [Term::text("x"), Term::text("")]);
    }

    fn value() -> impl Strategy<Value = String> {
        prop_oneof![
            "[A-Za-z0-9_.-]{1,8}",
            "[ -~]{0,12}",
            Just(String::new()),
            Just("a \"b\" \\ #c".to_string()),
        ]
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(vals in proptest::collection::vec(value(), 4)) {
            let cmds = vec![
                ScenarioCommand::new(Verb::OpenSession, &[("dept", &vals[0])]),
                ScenarioCommand::new(
                    Verb::RegisterTeacher,
                    &[("name", &vals[1]), ("designation", &vals[2]), ("contact", "1"), ("email", &vals[3])],
                ),
                ScenarioCommand::new(Verb::ExpectRefusal, &[("reason", &vals[0])]),
                ScenarioCommand::new(Verb::Crash, &[]),
            ];
            let text = print_scenario(&cmds);
            prop_assert_eq!(parse_scenario(&text).unwrap(), cmds);
        }
    }
}
