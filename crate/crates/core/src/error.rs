//! Error types and user-facing diagnostics.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::types::ScalarType;

/// Byte range into query text.
///
/// Spans never take part in equality: two syntax trees that differ only in
/// source positions compare equal.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Span {
        Span { start, end }
    }

    pub fn to(self, other: Span) -> Span {
        Span::new(self.start.min(other.start), self.end.max(other.end))
    }
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl Eq for Span {}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StoreError {
    #[error("log '{0}' already exists")]
    DuplicateLogId(String),
    #[error("unknown log '{0}'")]
    UnknownLog(String),
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("case has no events")]
    EmptyCase,
    #[error("column '{column}' expects {expected}, found {found}")]
    TypeMismatch { column: String, expected: ScalarType, found: String },
    #[error("duplicate case id '{0}'")]
    DuplicateCaseId(String),
    #[error("missing required field '{0}'")]
    MissingRequiredField(String),
    #[error("unknown column '{0}'")]
    UnknownColumn(String),
}

impl StoreError {
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::DuplicateLogId(_) => "DuplicateLogId",
            StoreError::UnknownLog(_) => "UnknownLog",
            StoreError::InvalidSchema(_) => "InvalidSchema",
            StoreError::EmptyCase => "EmptyCase",
            StoreError::TypeMismatch { .. } => "TypeMismatch",
            StoreError::DuplicateCaseId(_) => "DuplicateCaseId",
            StoreError::MissingRequiredField(_) => "MissingRequiredField",
            StoreError::UnknownColumn(_) => "UnknownColumn",
        }
    }
}

/// Which XES element lacked a `concept:name`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XesElement {
    Trace,
    Event,
}

impl fmt::Display for XesElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            XesElement::Trace => f.write_str("trace"),
            XesElement::Event => f.write_str("event"),
        }
    }
}

/// Rows are 1-based data rows (the header is not counted).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum IngestError {
    #[error("input has no header row")]
    MissingHeader,
    #[error("row {row}: cannot parse timestamp '{value}'")]
    UnparseableTimestamp { row: usize, value: String },
    #[error("row {row}: missing value for required column '{column}'")]
    MissingRequiredValue { row: usize, column: String },
    #[error("row {row}: invalid value '{value}' for column '{column}'")]
    InvalidValue { row: usize, column: String, value: String },
    #[error("case '{case_id}': case-level column '{column}' varies within the case")]
    InconsistentCaseAttribute { case_id: String, column: String },
    #[error("malformed XML: {0}")]
    MalformedXml(String),
    #[error("{0} without concept:name")]
    MissingConceptName(XesElement),
    #[error("event in trace '{trace}' has no time:timestamp")]
    MissingTimestamp { trace: String },
    #[error("invalid ingest config: {0}")]
    InvalidConfig(String),
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

impl IngestError {
    pub fn code(&self) -> &'static str {
        match self {
            IngestError::MissingHeader => "MissingHeader",
            IngestError::UnparseableTimestamp { .. } => "UnparseableTimestamp",
            IngestError::MissingRequiredValue { .. } => "MissingRequiredValue",
            IngestError::InvalidValue { .. } => "InvalidValue",
            IngestError::InconsistentCaseAttribute { .. } => "InconsistentCaseAttribute",
            IngestError::MalformedXml(_) => "MalformedXml",
            IngestError::MissingConceptName(_) => "MissingConceptName",
            IngestError::MissingTimestamp { .. } => "MissingTimestamp",
            IngestError::InvalidConfig(_) => "InvalidConfig",
            IngestError::Csv(_) => "MalformedCsv",
            IngestError::Io(_) => "IoError",
            IngestError::Store(e) => e.code(),
        }
    }
}

impl From<std::io::Error> for IngestError {
    fn from(e: std::io::Error) -> Self {
        IngestError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnterminatedString,
    IllegalCharacter,
    SyntaxError,
    MisplacedAnchor,
    InvalidNotOperand,
}

impl ParseErrorKind {
    pub fn code(self) -> &'static str {
        match self {
            ParseErrorKind::UnterminatedString => "UnterminatedString",
            ParseErrorKind::IllegalCharacter => "IllegalCharacter",
            ParseErrorKind::SyntaxError => "SyntaxError",
            ParseErrorKind::MisplacedAnchor => "MisplacedAnchor",
            ParseErrorKind::InvalidNotOperand => "InvalidNotOperand",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{message}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub message: String,
    pub span: Span,
    /// Token descriptions that would have been accepted (syntax errors only).
    pub expected: Vec<String>,
}

impl ParseError {
    pub fn new(kind: ParseErrorKind, span: Span, message: impl Into<String>) -> ParseError {
        ParseError { kind, message: message.into(), span, expected: Vec::new() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalyzeErrorKind {
    UnknownColumn,
    UnknownLog,
    NoCurrentProcess,
    TypeError,
    LevelError,
    NonAggregatedSubquery,
    NonBooleanBehaviour,
    MatchesOnFlattened,
    UnknownBehaviour,
    DuplicateBehaviour,
    UnknownFunction,
    InvalidAggregate,
    InvalidSubquery,
}

impl AnalyzeErrorKind {
    pub fn code(self) -> &'static str {
        match self {
            AnalyzeErrorKind::UnknownColumn => "UnknownColumn",
            AnalyzeErrorKind::UnknownLog => "UnknownLog",
            AnalyzeErrorKind::NoCurrentProcess => "NoCurrentProcess",
            AnalyzeErrorKind::TypeError => "TypeError",
            AnalyzeErrorKind::LevelError => "LevelError",
            AnalyzeErrorKind::NonAggregatedSubquery => "NonAggregatedSubquery",
            AnalyzeErrorKind::NonBooleanBehaviour => "NonBooleanBehaviour",
            AnalyzeErrorKind::MatchesOnFlattened => "MatchesOnFlattened",
            AnalyzeErrorKind::UnknownBehaviour => "UnknownBehaviour",
            AnalyzeErrorKind::DuplicateBehaviour => "DuplicateBehaviour",
            AnalyzeErrorKind::UnknownFunction => "UnknownFunction",
            AnalyzeErrorKind::InvalidAggregate => "InvalidAggregate",
            AnalyzeErrorKind::InvalidSubquery => "InvalidSubquery",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{message}")]
pub struct AnalyzeError {
    pub kind: AnalyzeErrorKind,
    pub message: String,
    pub span: Span,
}

impl AnalyzeError {
    pub fn new(kind: AnalyzeErrorKind, span: Span, message: impl Into<String>) -> AnalyzeError {
        AnalyzeError { kind, message: message.into(), span }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExecError {
    #[error("evaluation error in {operator}: {kind}")]
    EvaluationError { kind: String, operator: String },
    #[error("query exceeds the budget of {limit} materialized cells")]
    ResourceLimitExceeded { limit: usize },
    #[error("snapshot does not contain column '{0}'")]
    SnapshotColumnMissing(String),
}

impl ExecError {
    pub fn code(&self) -> &'static str {
        match self {
            ExecError::EvaluationError { .. } => "EvaluationError",
            ExecError::ResourceLimitExceeded { .. } => "ResourceLimitExceeded",
            ExecError::SnapshotColumnMissing(_) => "SnapshotColumnMissing",
        }
    }

    pub(crate) fn eval(operator: &str, kind: impl Into<String>) -> ExecError {
        ExecError::EvaluationError { kind: kind.into(), operator: operator.to_string() }
    }
}

/// Any error the engine can report for a request.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Analyze(#[from] AnalyzeError),
    #[error(transparent)]
    Exec(#[from] ExecError),
}

impl Error {
    /// Stable error code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Store(e) => e.code(),
            Error::Ingest(e) => e.code(),
            Error::Parse(e) => e.kind.code(),
            Error::Analyze(e) => e.kind.code(),
            Error::Exec(e) => e.code(),
        }
    }

    pub fn span(&self) -> Option<Span> {
        match self {
            Error::Parse(e) => Some(e.span),
            Error::Analyze(e) => Some(e.span),
            _ => None,
        }
    }

    pub fn diagnostic(&self) -> Diagnostic {
        Diagnostic { code: self.code().to_string(), message: self.to_string(), span: self.span() }
    }
}

/// Serializable error report: code, human message and optional source span.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub code: String,
    pub message: String,
    pub span: Option<Span>,
}

impl Diagnostic {
    /// Renders the message followed by the offending source line and a caret
    /// marker under the span.
    pub fn render(&self, source: &str) -> String {
        let mut out = format!("error[{}]: {}", self.code, self.message);
        let Some(span) = self.span else {
            return out;
        };
        let start = span.start.min(source.len());
        let line_start = source[..start].rfind('\n').map_or(0, |i| i + 1);
        let line_end = source[start..].find('\n').map_or(source.len(), |i| start + i);
        let line_no = source[..line_start].matches('\n').count() + 1;
        let line = &source[line_start..line_end];
        let col = source[line_start..start].chars().count();
        let width = source[start..span.end.clamp(start, line_end)].chars().count().max(1);
        out.push_str(&format!(
            "\n  --> line {line_no}, column {}\n   | {line}\n   | {}{}",
            col + 1,
            " ".repeat(col),
            "^".repeat(width)
        ));
        out
    }
}
