//! Row pattern matching over per-case event sequences.
//!
//! A pattern is lowered to a regular expression over event classes and
//! compiled to a Thompson NFA. A case matches when some contiguous window of
//! its trace is accepted; `^` and `$` pin the window to the first and last
//! event. [`brute_force_match`] evaluates the operator definitions directly
//! on the syntax tree and serves as a reference.

mod bitmap;
mod behaviours;
mod nfa;
mod oracle;

use std::fmt;

pub use behaviours::{evaluate_behaviours, BehaviourFrame};
pub use bitmap::{BehaviourBitmap, Bitmap, CaseTrace};
pub use nfa::Nfa;
pub use oracle::brute_force_match;

use crate::error::Span;
use crate::parser::Pattern;

/// A set of single events.
#[derive(Clone, Debug, PartialEq)]
pub enum Class {
    Behaviour(usize),
    Any,
    Not(Box<Class>),
    Union(Vec<Class>),
}

impl Class {
    #[inline]
    pub fn contains(&self, pos: usize, bitmaps: &BehaviourBitmap) -> bool {
        match self {
            Class::Behaviour(b) => bitmaps.contains(*b, pos),
            Class::Any => true,
            Class::Not(inner) => !inner.contains(pos, bitmaps),
            Class::Union(items) => items.iter().any(|c| c.contains(pos, bitmaps)),
        }
    }
}

/// Lowered pattern: a regular expression over event classes with position
/// assertions.
#[derive(Clone, Debug, PartialEq)]
pub enum Regex {
    Empty,
    Class(Class),
    Concat(Vec<Regex>),
    Alt(Vec<Regex>),
    Star(Box<Regex>),
    AssertStart,
    AssertEnd,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CompileError {
    UnknownBehaviour { name: String, span: Span },
    /// A string literal atom reached the compiler; literals are desugared to
    /// behaviours beforehand.
    UndesugaredLiteral { value: String, span: Span },
    InvalidNotOperand,
}

impl fmt::Display for CompileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompileError::UnknownBehaviour { name, .. } => write!(f, "unknown behaviour '{name}'"),
            CompileError::UndesugaredLiteral { value, .. } => {
                write!(f, "literal '{value}' has no behaviour binding")
            }
            CompileError::InvalidNotOperand => f.write_str("NOT takes a single-event class"),
        }
    }
}

/// Finds the behaviour an atom refers to. Unquoted names compare
/// ASCII-case-insensitively, quoted names exactly.
pub fn resolve_behaviour(names: &[String], name: &str, quoted: bool) -> Option<usize> {
    names
        .iter()
        .position(|n| n == name)
        .or_else(|| if quoted { None } else { names.iter().position(|n| n.eq_ignore_ascii_case(name)) })
}

/// Lowers the syntax tree: `a -> b` to `a b`, `a ~> b` to `a ANY* b`,
/// anchors to assertions.
pub fn lower(pattern: &Pattern, names: &[String]) -> Result<Regex, CompileError> {
    Ok(match pattern {
        Pattern::Behaviour { .. } | Pattern::Literal { .. } | Pattern::Any | Pattern::Not(_) => {
            Regex::Class(class_of(pattern, names)?)
        }
        Pattern::Concat(a, b) | Pattern::DirectlyFollows(a, b) => {
            Regex::Concat(vec![lower(a, names)?, lower(b, names)?])
        }
        Pattern::EventuallyFollows(a, b) => Regex::Concat(vec![
            lower(a, names)?,
            Regex::Star(Box::new(Regex::Class(Class::Any))),
            lower(b, names)?,
        ]),
        Pattern::Alternation(items) => {
            Regex::Alt(items.iter().map(|p| lower(p, names)).collect::<Result<_, _>>()?)
        }
        Pattern::Repeat(inner) => Regex::Star(Box::new(lower(inner, names)?)),
        Pattern::Anchored { start, end, inner, .. } => {
            let mut parts = Vec::new();
            if *start {
                parts.push(Regex::AssertStart);
            }
            parts.push(lower(inner, names)?);
            if *end {
                parts.push(Regex::AssertEnd);
            }
            Regex::Concat(parts)
        }
    })
}

pub(crate) fn class_of(pattern: &Pattern, names: &[String]) -> Result<Class, CompileError> {
    match pattern {
        Pattern::Behaviour { name, quoted, span } => resolve_behaviour(names, name, *quoted)
            .map(Class::Behaviour)
            .ok_or_else(|| CompileError::UnknownBehaviour { name: name.clone(), span: *span }),
        Pattern::Literal { value, span } => {
            Err(CompileError::UndesugaredLiteral { value: value.clone(), span: *span })
        }
        Pattern::Any => Ok(Class::Any),
        Pattern::Not(inner) => Ok(Class::Not(Box::new(class_of(inner, names)?))),
        Pattern::Alternation(items) => {
            Ok(Class::Union(items.iter().map(|p| class_of(p, names)).collect::<Result<_, _>>()?))
        }
        _ => Err(CompileError::InvalidNotOperand),
    }
}

/// A pattern ready for matching.
#[derive(Clone, Debug)]
pub struct CompiledPattern {
    regex: Regex,
    nfa: Nfa,
    anchored_start: bool,
    anchored_end: bool,
}

impl CompiledPattern {
    pub fn regex(&self) -> &Regex {
        &self.regex
    }

    pub fn nfa(&self) -> &Nfa {
        &self.nfa
    }

    /// Whether the whole pattern is pinned to the first event.
    pub fn anchored_start(&self) -> bool {
        self.anchored_start
    }

    /// Whether the whole pattern is pinned to the last event.
    pub fn anchored_end(&self) -> bool {
        self.anchored_end
    }
}

/// Compiles a pattern whose atoms name entries of `behaviours`.
pub fn compile(pattern: &Pattern, behaviours: &[String]) -> Result<CompiledPattern, CompileError> {
    let regex = lower(pattern, behaviours)?;
    let (anchored_start, anchored_end) = match pattern {
        Pattern::Anchored { start, end, .. } => (*start, *end),
        _ => (false, false),
    };
    let nfa = Nfa::build(&regex);
    Ok(CompiledPattern { regex, nfa, anchored_start, anchored_end })
}

pub fn match_case(compiled: &CompiledPattern, trace: CaseTrace, bitmaps: &BehaviourBitmap) -> bool {
    compiled.nfa.matches(trace, bitmaps)
}
