//! Ground scalar terms and flat predicate atoms.
//!
//! Beliefs, message contents and store commands are all flat atoms of the
//! form `name(arg, ...)` whose arguments are scalars. There are no variables,
//! so every atom is ground by construction.

use std::fmt;

use thiserror::Error;

/// A scalar argument: integer, quoted text or bare identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Int(i64),
    Text(String),
    Id(String),
}

impl Term {
    pub fn text(s: impl Into<String>) -> Self {
        Term::Text(s.into())
    }

    pub fn id(s: impl Into<String>) -> Self {
        Term::Id(s.into())
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Term::Int(v) => Some(*v),
            _ => None,
        }
    }

    /// Textual view of text and identifier terms.
    pub fn as_str(&self) -> Option<&str> {
        match self {
            Term::Text(s) | Term::Id(s) => Some(s),
            Term::Int(_) => None,
        }
    }

    /// The value as a plain string without quoting, whatever the variant.
    pub fn plain(&self) -> String {
        match self {
            Term::Int(v) => v.to_string(),
            Term::Text(s) | Term::Id(s) => s.clone(),
        }
    }

    /// Empty text counts as an absent value for completeness checks.
    pub fn is_empty(&self) -> bool {
        matches!(self, Term::Text(s) | Term::Id(s) if s.trim().is_empty())
    }
}

impl From<i64> for Term {
    fn from(v: i64) -> Self {
        Term::Int(v)
    }
}

impl From<&str> for Term {
    fn from(v: &str) -> Self {
        Term::Text(v.to_string())
    }
}

impl From<String> for Term {
    fn from(v: String) -> Self {
        Term::Text(v)
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.' | ':')
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if is_ident_start(c)) && chars.all(is_ident_char)
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Int(v) => write!(f, "{v}"),
            Term::Id(s) if is_ident(s) => f.write_str(s),
            Term::Id(s) | Term::Text(s) => {
                f.write_str("\"")?;
                for ch in s.chars() {
                    match ch {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        _ => write!(f, "{ch}")?,
                    }
                }
                f.write_str("\"")
            }
        }
    }
}

/// A flat predicate: a symbol name applied to scalar terms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub name: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(name: impl Into<String>, args: Vec<Term>) -> Self {
        Atom {
            name: name.into(),
            args,
        }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn arg(&self, i: usize) -> Option<&Term> {
        self.args.get(i)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.name)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed term at byte {offset}: {message}")]
pub struct TermParseError {
    pub offset: usize,
    pub message: &'static str,
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn err(&self, message: &'static str) -> TermParseError {
        TermParseError {
            offset: self.pos,
            message,
        }
    }

    fn expect(&mut self, want: char, message: &'static str) -> Result<(), TermParseError> {
        match self.bump() {
            Some(c) if c == want => Ok(()),
            _ => Err(self.err(message)),
        }
    }

    fn ident(&mut self) -> Result<&'a str, TermParseError> {
        let start = self.pos;
        match self.peek() {
            Some(c) if is_ident_start(c) => {
                self.bump();
            }
            _ => return Err(self.err("expected identifier")),
        }
        while matches!(self.peek(), Some(c) if is_ident_char(c)) {
            self.bump();
        }
        Ok(&self.src[start..self.pos])
    }

    fn term(&mut self) -> Result<Term, TermParseError> {
        match self.peek() {
            Some('"') => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => return Err(self.err("unterminated text")),
                        Some('"') => break,
                        Some('\\') => match self.bump() {
                            Some('"') => s.push('"'),
                            Some('\\') => s.push('\\'),
                            Some('n') => s.push('\n'),
                            _ => return Err(self.err("bad escape")),
                        },
                        Some(c) => s.push(c),
                    }
                }
                Ok(Term::Text(s))
            }
            Some(c) if c == '-' || c.is_ascii_digit() => {
                let start = self.pos;
                self.bump();
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.bump();
                }
                self.src[start..self.pos]
                    .parse()
                    .map(Term::Int)
                    .map_err(|_| self.err("bad integer"))
            }
            _ => Ok(Term::Id(self.ident()?.to_string())),
        }
    }
}

impl std::str::FromStr for Atom {
    type Err = TermParseError;

    fn from_str(src: &str) -> Result<Self, Self::Err> {
        let mut cur = Cursor { src, pos: 0 };
        let name = cur.ident()?.to_string();
        cur.expect('(', "expected '('")?;
        let mut args = Vec::new();
        if cur.peek() == Some(')') {
            cur.bump();
        } else {
            loop {
                args.push(cur.term()?);
                match cur.bump() {
                    Some(',') => continue,
                    Some(')') => break,
                    _ => return Err(cur.err("expected ',' or ')'")),
                }
            }
        }
        if cur.pos != src.len() {
            return Err(cur.err("trailing input"));
        }
        Ok(Atom { name, args })
    }
}

/// Parse a comma-separated term list, the inside of an atom's parentheses.
pub fn parse_terms(src: &str) -> Result<Vec<Term>, TermParseError> {
    format!("t({src})").parse::<Atom>().map(|a| a.args)
}

/// Render a term list as [`parse_terms`] reads it.
pub fn render_terms(terms: &[Term]) -> String {
    terms
        .iter()
        .map(|t| t.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn renders_flat_atoms() {
        let a = Atom::new(
            "add_student",
            vec![Term::Int(111), Term::text("Ali \"K\""), Term::id("CS")],
        );
        assert_eq!(a.to_string(), r#"add_student(111,"Ali \"K\"",CS)"#);
        assert_eq!(a.to_string().parse::<Atom>().unwrap(), a);
        assert_eq!("p()".parse::<Atom>().unwrap(), Atom::new("p", vec![]));
    }

    #[test]
    fn rejects_garbage() {
        assert!("p(".parse::<Atom>().is_err());
        assert!("(1)".parse::<Atom>().is_err());
        assert!("p(1)x".parse::<Atom>().is_err());
        assert!("p(\"x)".parse::<Atom>().is_err());
    }

    #[test]
    fn non_identifier_ids_are_quoted() {
        assert_eq!(Term::id("a b").to_string(), "\"a b\"");
        assert_eq!(Term::id("GW-0-3").to_string(), "GW-0-3");
    }

    fn term_strategy() -> impl Strategy<Value = Term> {
        prop_oneof![
            any::<i64>().prop_map(Term::Int),
            ".*".prop_map(Term::Text),
            "[a-zA-Z_][a-zA-Z0-9_.:-]{0,6}".prop_map(Term::Id),
        ]
    }

    proptest! {
        #[test]
        fn atom_display_round_trips(
            name in "[a-z_][a-z0-9_:]{0,10}",
            args in proptest::collection::vec(term_strategy(), 0..5),
        ) {
            let atom = Atom::new(name, args);
            prop_assert_eq!(atom.to_string().parse::<Atom>().unwrap(), atom);
        }
    }
}
