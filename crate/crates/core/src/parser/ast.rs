//! Syntax tree of a query. Spans are carried for diagnostics but never take
//! part in equality.

use crate::error::Span;

#[derive(Clone, Debug, PartialEq)]
pub struct QueryAst {
    pub select: Vec<SelectItem>,
    /// Absent only in event-level subqueries (implicit `FROM events`).
    pub from: Option<Source>,
    pub behaviours: Vec<BehaviourDef>,
    pub selection: Option<Expr>,
    pub group_by: Vec<Expr>,
    pub order_by: Vec<OrderItem>,
    pub limit: Option<u64>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelectItem {
    pub expr: Expr,
    pub alias: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Source {
    Named { name: String, quoted: bool, span: Span },
    ThisProcess(Span),
    Flatten(Box<Source>),
}

impl Source {
    /// Innermost source, unwrapping any `FLATTEN`.
    pub fn base(&self) -> &Source {
        match self {
            Source::Flatten(inner) => inner.base(),
            other => other,
        }
    }

    pub fn is_flattened(&self) -> bool {
        matches!(self, Source::Flatten(_))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BehaviourDef {
    pub expr: Expr,
    pub name: String,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrderItem {
    pub expr: Expr,
    pub descending: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Expr {
        Expr { kind, span }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Literal {
    String(String),
    Number(f64),
    Boolean(bool),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Not,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    NotEq,
    Lt,
    LtEq,
    Gt,
    GtEq,
    And,
    Or,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Eq => "=",
            BinaryOp::NotEq => "<>",
            BinaryOp::Lt => "<",
            BinaryOp::LtEq => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::GtEq => ">=",
            BinaryOp::And => "AND",
            BinaryOp::Or => "OR",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinaryOp::Eq | BinaryOp::NotEq | BinaryOp::Lt | BinaryOp::LtEq | BinaryOp::Gt | BinaryOp::GtEq
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Column { name: String, quoted: bool },
    Literal(Literal),
    /// `*` in a select list or as the argument of `COUNT(*)`.
    Star,
    Unary { op: UnaryOp, expr: Box<Expr> },
    Binary { op: BinaryOp, left: Box<Expr>, right: Box<Expr> },
    InList { expr: Box<Expr>, list: Vec<Expr>, negated: bool },
    IsNull { expr: Box<Expr>, negated: bool },
    Function { name: String, distinct: bool, args: Vec<Expr> },
    /// Event-level scalar subquery.
    Subquery(Box<QueryAst>),
    /// `col MATCHES (...)` when `subject` is set, `MATCHES (...)` otherwise.
    Matches { subject: Option<Box<Expr>>, pattern: Pattern },
}

/// Row pattern over a case's event sequence.
#[derive(Clone, Debug, PartialEq)]
pub enum Pattern {
    /// Reference to a named behaviour.
    Behaviour { name: String, quoted: bool, span: Span },
    /// String literal atom; desugared to an equality behaviour.
    Literal { value: String, span: Span },
    Any,
    /// One event outside the operand's class.
    Not(Box<Pattern>),
    Concat(Box<Pattern>, Box<Pattern>),
    /// `->`
    DirectlyFollows(Box<Pattern>, Box<Pattern>),
    /// `~>`
    EventuallyFollows(Box<Pattern>, Box<Pattern>),
    Alternation(Vec<Pattern>),
    Repeat(Box<Pattern>),
    Anchored { start: bool, end: bool, inner: Box<Pattern>, span: Span },
}

impl Pattern {
    /// Whether the pattern denotes a single-event class, i.e. is a valid
    /// `NOT` operand.
    pub fn is_class(&self) -> bool {
        match self {
            Pattern::Behaviour { .. } | Pattern::Literal { .. } | Pattern::Any => true,
            Pattern::Not(inner) => inner.is_class(),
            Pattern::Alternation(items) => items.iter().all(Pattern::is_class),
            _ => false,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Pattern::Behaviour { .. } | Pattern::Literal { .. } | Pattern::Any => 1,
            Pattern::Not(p) | Pattern::Repeat(p) => 1 + p.depth(),
            Pattern::Anchored { inner, .. } => 1 + inner.depth(),
            Pattern::Concat(a, b) | Pattern::DirectlyFollows(a, b) | Pattern::EventuallyFollows(a, b) => {
                1 + a.depth().max(b.depth())
            }
            Pattern::Alternation(items) => 1 + items.iter().map(Pattern::depth).max().unwrap_or(0),
        }
    }
}
