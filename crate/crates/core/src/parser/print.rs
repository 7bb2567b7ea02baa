//! Canonical text form of syntax trees. Printing and re-parsing yields an
//! equal tree.

use std::fmt::{self, Display, Formatter, Write};

use crate::parser::ast::*;
use crate::parser::lexer::Keyword;

const P_OR: u8 = 1;
const P_AND: u8 = 2;
const P_NOT: u8 = 3;
const P_CMP: u8 = 4;
const P_ADD: u8 = 5;
const P_MUL: u8 = 6;
const P_NEG: u8 = 7;
const P_ATOM: u8 = 8;

/// Whether an identifier must be double-quoted to lex as one.
pub(crate) fn needs_quotes(name: &str) -> bool {
    let mut chars = name.chars();
    let head_ok = matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_');
    !head_ok || !chars.all(|c| c.is_ascii_alphanumeric() || c == '_') || Keyword::lookup(name).is_some()
}

fn write_ident(f: &mut impl Write, name: &str, quoted: bool) -> fmt::Result {
    if quoted || needs_quotes(name) {
        write!(f, "\"{}\"", name.replace('"', "\"\""))
    } else {
        f.write_str(name)
    }
}

fn write_string(f: &mut impl Write, s: &str) -> fmt::Result {
    write!(f, "'{}'", s.replace('\'', "''"))
}

fn expr_prec(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Binary { op, .. } => match op {
            BinaryOp::Or => P_OR,
            BinaryOp::And => P_AND,
            BinaryOp::Add | BinaryOp::Sub => P_ADD,
            BinaryOp::Mul | BinaryOp::Div => P_MUL,
            _ => P_CMP,
        },
        ExprKind::Unary { op: UnaryOp::Not, .. } => P_NOT,
        ExprKind::Unary { op: UnaryOp::Neg, .. } => P_NEG,
        ExprKind::InList { .. } | ExprKind::IsNull { .. } => P_CMP,
        ExprKind::Matches { subject: Some(_), .. } => P_CMP,
        _ => P_ATOM,
    }
}

fn write_expr(f: &mut Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    let prec = expr_prec(e);
    if prec < min {
        f.write_char('(')?;
    }
    match &e.kind {
        ExprKind::Column { name, quoted } => write_ident(f, name, *quoted)?,
        ExprKind::Literal(Literal::String(s)) => write_string(f, s)?,
        ExprKind::Literal(Literal::Number(n)) => write!(f, "{n}")?,
        ExprKind::Literal(Literal::Boolean(b)) => f.write_str(if *b { "TRUE" } else { "FALSE" })?,
        ExprKind::Star => f.write_char('*')?,
        ExprKind::Unary { op: UnaryOp::Not, expr } => {
            f.write_str("NOT ")?;
            write_expr(f, expr, P_NOT)?;
        }
        ExprKind::Unary { op: UnaryOp::Neg, expr } => {
            f.write_char('-')?;
            // `--` would start a comment.
            let inner_min = if matches!(expr.kind, ExprKind::Unary { op: UnaryOp::Neg, .. }) { P_ATOM + 1 } else { P_NEG };
            write_expr(f, expr, inner_min)?;
        }
        ExprKind::Binary { op, left, right } => {
            let (lmin, rmin) = if op.is_comparison() { (P_CMP + 1, P_CMP + 1) } else { (prec, prec + 1) };
            write_expr(f, left, lmin)?;
            write!(f, " {} ", op.symbol())?;
            write_expr(f, right, rmin)?;
        }
        ExprKind::InList { expr, list, negated } => {
            write_expr(f, expr, P_CMP + 1)?;
            f.write_str(if *negated { " NOT IN (" } else { " IN (" })?;
            for (i, item) in list.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write_expr(f, item, 0)?;
            }
            f.write_char(')')?;
        }
        ExprKind::IsNull { expr, negated } => {
            write_expr(f, expr, P_CMP + 1)?;
            f.write_str(if *negated { " IS NOT NULL" } else { " IS NULL" })?;
        }
        ExprKind::Function { name, distinct, args } => {
            write!(f, "{name}(")?;
            if *distinct {
                f.write_str("DISTINCT ")?;
            }
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write_expr(f, a, 0)?;
            }
            f.write_char(')')?;
        }
        ExprKind::Subquery(q) => write!(f, "({q})")?,
        ExprKind::Matches { subject, pattern } => {
            if let Some(s) = subject {
                write_expr(f, s, P_CMP + 1)?;
                f.write_char(' ')?;
            }
            write!(f, "MATCHES ({pattern})")?;
        }
    }
    if prec < min {
        f.write_char(')')?;
    }
    Ok(())
}

impl Display for Expr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write_expr(f, self, 0)
    }
}

const Q_ANCHOR: u8 = 0;
const Q_ALT: u8 = 1;
const Q_SEQ: u8 = 2;
const Q_ATOM: u8 = 4;

fn pattern_prec(p: &Pattern) -> u8 {
    match p {
        Pattern::Anchored { .. } => Q_ANCHOR,
        Pattern::Alternation(_) => Q_ALT,
        Pattern::Concat(..) | Pattern::DirectlyFollows(..) | Pattern::EventuallyFollows(..) => Q_SEQ,
        Pattern::Repeat(_) => Q_SEQ + 1,
        _ => Q_ATOM,
    }
}

fn write_pattern(f: &mut Formatter<'_>, p: &Pattern, min: u8) -> fmt::Result {
    let prec = pattern_prec(p);
    if prec < min {
        f.write_char('(')?;
    }
    match p {
        Pattern::Behaviour { name, quoted, .. } => write_ident(f, name, *quoted)?,
        Pattern::Literal { value, .. } => write_string(f, value)?,
        Pattern::Any => f.write_str("ANY")?,
        Pattern::Not(inner) => {
            f.write_str("NOT ")?;
            write_pattern(f, inner, Q_ATOM)?;
        }
        Pattern::Concat(a, b) | Pattern::DirectlyFollows(a, b) | Pattern::EventuallyFollows(a, b) => {
            write_pattern(f, a, Q_SEQ)?;
            f.write_str(match p {
                Pattern::Concat(..) => " ",
                Pattern::DirectlyFollows(..) => " -> ",
                _ => " ~> ",
            })?;
            write_pattern(f, b, Q_SEQ + 1)?;
        }
        Pattern::Alternation(items) => {
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    f.write_str(" | ")?;
                }
                write_pattern(f, item, Q_SEQ)?;
            }
        }
        Pattern::Repeat(inner) => {
            write_pattern(f, inner, Q_ATOM)?;
            f.write_char('*')?;
        }
        Pattern::Anchored { start, end, inner, .. } => {
            if *start {
                f.write_str("^ ")?;
            }
            write_pattern(f, inner, Q_ALT)?;
            if *end {
                f.write_str(" $")?;
            }
        }
    }
    if prec < min {
        f.write_char(')')?;
    }
    Ok(())
}

impl Display for Pattern {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write_pattern(f, self, 0)
    }
}

impl Display for Source {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Source::Named { name, quoted, .. } => write_ident(f, name, *quoted),
            Source::ThisProcess(_) => f.write_str("THIS_PROCESS"),
            Source::Flatten(inner) => write!(f, "FLATTEN({inner})"),
        }
    }
}

impl Display for QueryAst {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_str("SELECT ")?;
        for (i, item) in self.select.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}", item.expr)?;
            if let Some(alias) = &item.alias {
                f.write_str(" AS ")?;
                write_ident(f, alias, false)?;
            }
        }
        if let Some(src) = &self.from {
            write!(f, " FROM {src}")?;
        }
        for b in &self.behaviours {
            write!(f, " BEHAVIOUR ({}) AS ", b.expr)?;
            write_ident(f, &b.name, false)?;
        }
        if let Some(w) = &self.selection {
            write!(f, " WHERE {w}")?;
        }
        for (i, g) in self.group_by.iter().enumerate() {
            f.write_str(if i == 0 { " GROUP BY " } else { ", " })?;
            write!(f, "{g}")?;
        }
        for (i, o) in self.order_by.iter().enumerate() {
            f.write_str(if i == 0 { " ORDER BY " } else { ", " })?;
            write!(f, "{}", o.expr)?;
            if o.descending {
                f.write_str(" DESC")?;
            }
        }
        if let Some(n) = self.limit {
            write!(f, " LIMIT {n}")?;
        }
        Ok(())
    }
}
