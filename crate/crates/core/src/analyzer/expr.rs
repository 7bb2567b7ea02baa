use std::fmt;
use std::sync::Arc;

use crate::pattern::CompiledPattern;
use crate::types::{Level, ScalarType, Value};

/// A resolved column.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ColumnRef {
    pub level: Level,
    pub index: usize,
    pub name: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    NotEq,
    Lt,
    LtEq,
    Gt,
    GtEq,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::NotEq => "<>",
            CmpOp::Lt => "<",
            CmpOp::LtEq => "<=",
            CmpOp::Gt => ">",
            CmpOp::GtEq => ">=",
        }
    }

    pub fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            CmpOp::Eq => ord == Equal,
            CmpOp::NotEq => ord != Equal,
            CmpOp::Lt => ord == Less,
            CmpOp::LtEq => ord != Greater,
            CmpOp::Gt => ord == Greater,
            CmpOp::GtEq => ord != Less,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScalarFunc {
    Lower,
    Upper,
    Length,
    Abs,
    Coalesce,
}

impl ScalarFunc {
    pub fn lookup(name: &str) -> Option<ScalarFunc> {
        Some(match name.to_ascii_uppercase().as_str() {
            "LOWER" => ScalarFunc::Lower,
            "UPPER" => ScalarFunc::Upper,
            "LENGTH" => ScalarFunc::Length,
            "ABS" => ScalarFunc::Abs,
            "COALESCE" => ScalarFunc::Coalesce,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            ScalarFunc::Lower => "LOWER",
            ScalarFunc::Upper => "UPPER",
            ScalarFunc::Length => "LENGTH",
            ScalarFunc::Abs => "ABS",
            ScalarFunc::Coalesce => "COALESCE",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AggFunc {
    Count,
    CountStar,
    Sum,
    Avg,
    Min,
    Max,
    First,
    Last,
}

impl AggFunc {
    pub fn lookup(name: &str) -> Option<AggFunc> {
        Some(match name.to_ascii_uppercase().as_str() {
            "COUNT" => AggFunc::Count,
            "SUM" => AggFunc::Sum,
            "AVG" => AggFunc::Avg,
            "MIN" => AggFunc::Min,
            "MAX" => AggFunc::Max,
            "FIRST" => AggFunc::First,
            "LAST" => AggFunc::Last,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            AggFunc::Count | AggFunc::CountStar => "COUNT",
            AggFunc::Sum => "SUM",
            AggFunc::Avg => "AVG",
            AggFunc::Min => "MIN",
            AggFunc::Max => "MAX",
            AggFunc::First => "FIRST",
            AggFunc::Last => "LAST",
        }
    }
}

/// Behaviours and compiled automaton of one `MATCHES` expression.
#[derive(Debug)]
pub struct MatchSpec {
    /// Source text of the pattern, for plan output.
    pub text: String,
    /// Behaviour names, indexed like `behaviours`.
    pub names: Vec<String>,
    /// Event-level Boolean predicates; literal atoms appear here as
    /// equality tests on the subject column.
    pub behaviours: Vec<TypedExpr>,
    pub pattern: CompiledPattern,
}

#[derive(Clone, Debug)]
pub struct TypedExpr {
    pub kind: TExpr,
    pub ty: ScalarType,
    pub level: Level,
}

#[derive(Clone, Debug)]
pub enum TExpr {
    Column(ColumnRef),
    Literal(Value),
    Negate(Box<TypedExpr>),
    Not(Box<TypedExpr>),
    Arith { op: ArithOp, left: Box<TypedExpr>, right: Box<TypedExpr> },
    /// `ignore_case` makes string equality ASCII- and Unicode-case-blind; it
    /// is only set for desugared pattern literals.
    Compare { op: CmpOp, left: Box<TypedExpr>, right: Box<TypedExpr>, ignore_case: bool },
    And(Box<TypedExpr>, Box<TypedExpr>),
    Or(Box<TypedExpr>, Box<TypedExpr>),
    InList { expr: Box<TypedExpr>, list: Vec<TypedExpr>, negated: bool },
    IsNull { expr: Box<TypedExpr>, negated: bool },
    Scalar { func: ScalarFunc, args: Vec<TypedExpr> },
    /// Case-level: some event of the case satisfies the event-level predicate.
    Exists(Box<TypedExpr>),
    /// Case-level value computed by `EventSubqueryEval` into this slot.
    EventAgg(usize),
    /// Case-level pattern test.
    Matches(Arc<MatchSpec>),
    /// Column `i` of the input rows (output of an `Aggregate`).
    Input(usize),
}

impl TypedExpr {
    pub fn new(kind: TExpr, ty: ScalarType, level: Level) -> TypedExpr {
        TypedExpr { kind, ty, level }
    }

    pub fn literal(value: Value, ty: ScalarType) -> TypedExpr {
        TypedExpr::new(TExpr::Literal(value), ty, Level::Case)
    }

    /// Direct children, in evaluation order.
    pub fn children(&self) -> Vec<&TypedExpr> {
        match &self.kind {
            TExpr::Column(_) | TExpr::Literal(_) | TExpr::EventAgg(_) | TExpr::Input(_) => vec![],
            TExpr::Matches(_) => vec![],
            TExpr::Negate(e) | TExpr::Not(e) | TExpr::Exists(e) => vec![e],
            TExpr::IsNull { expr, .. } => vec![expr],
            TExpr::Arith { left, right, .. } | TExpr::Compare { left, right, .. } => vec![left, right],
            TExpr::And(a, b) | TExpr::Or(a, b) => vec![a, b],
            TExpr::InList { expr, list, .. } => std::iter::once(&**expr).chain(list).collect(),
            TExpr::Scalar { args, .. } => args.iter().collect(),
        }
    }

    /// Calls `f` on this node and every descendant, including behaviour
    /// predicates inside `MATCHES`.
    pub fn visit(&self, f: &mut dyn FnMut(&TypedExpr)) {
        f(self);
        if let TExpr::Matches(spec) = &self.kind {
            for b in &spec.behaviours {
                b.visit(f);
            }
        }
        for c in self.children() {
            c.visit(f);
        }
    }

    pub fn uses_slots(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| found |= matches!(e.kind, TExpr::EventAgg(_)));
        found
    }

    pub fn columns(&self, out: &mut Vec<(Level, usize)>) {
        self.visit(&mut |e| {
            if let TExpr::Column(c) = &e.kind {
                out.push((c.level, c.index));
            }
        });
    }

    /// Splits a conjunction into its conjuncts.
    pub fn conjuncts(self) -> Vec<TypedExpr> {
        match self.kind {
            TExpr::And(a, b) => {
                let mut out = a.conjuncts();
                out.extend(b.conjuncts());
                out
            }
            _ => vec![self],
        }
    }

    /// Left-deep conjunction; `None` for no conjuncts.
    pub fn and_all(items: Vec<TypedExpr>) -> Option<TypedExpr> {
        items.into_iter().reduce(|a, b| {
            let level = a.level.max(b.level);
            TypedExpr::new(TExpr::And(Box::new(a), Box::new(b)), ScalarType::Boolean, level)
        })
    }
}

impl fmt::Display for TypedExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            TExpr::Column(c) => write!(f, "{}.{}", c.level, c.name),
            TExpr::Literal(Value::String(s)) => write!(f, "'{}'", s.replace('\'', "''")),
            TExpr::Literal(v) => write!(f, "{v}"),
            TExpr::Negate(e) => write!(f, "-({e})"),
            TExpr::Not(e) => write!(f, "NOT ({e})"),
            TExpr::Arith { op, left, right } => write!(f, "({left} {} {right})", op.symbol()),
            TExpr::Compare { op, left, right, ignore_case } => {
                let marker = if *ignore_case { "ci" } else { "" };
                write!(f, "({left} {}{marker} {right})", op.symbol())
            }
            TExpr::And(a, b) => write!(f, "({a} AND {b})"),
            TExpr::Or(a, b) => write!(f, "({a} OR {b})"),
            TExpr::InList { expr, list, negated } => {
                write!(f, "({expr} {}IN (", if *negated { "NOT " } else { "" })?;
                for (i, item) in list.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str("))")
            }
            TExpr::IsNull { expr, negated } => {
                write!(f, "({expr} IS {}NULL)", if *negated { "NOT " } else { "" })
            }
            TExpr::Scalar { func, args } => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            TExpr::Exists(e) => write!(f, "EXISTS event {e}"),
            TExpr::EventAgg(slot) => write!(f, "${slot}"),
            TExpr::Matches(spec) => write!(f, "MATCHES({})", spec.text),
            TExpr::Input(i) => write!(f, "#{i}"),
        }
    }
}
