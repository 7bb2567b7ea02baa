//! Name resolution, the case/event level and type checks, and lowering of
//! the syntax tree into a [`LogicalPlan`].

mod expr;
mod plan;

use std::sync::Arc;

pub use expr::{AggFunc, ArithOp, CmpOp, ColumnRef, MatchSpec, ScalarFunc, TExpr, TypedExpr};
pub use plan::{AggStrategy, AggregateCall, EventAggregate, LogicalPlan, SortKey};

use crate::error::{AnalyzeError, AnalyzeErrorKind as K, Span};
use crate::parser::{BinaryOp, Expr, ExprKind, Literal, Pattern, QueryAst, Source, UnaryOp};
use crate::pattern::{self, CompileError};
use crate::result::ResultColumn;
use crate::store::{Schema, EVENT_NAME};
use crate::types::{Level, ScalarType, Value};

type Result<T> = std::result::Result<T, AnalyzeError>;

/// Where an expression is being analyzed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Ctx {
    /// One row per case (per event when flattened), before grouping.
    Row,
    /// One row per event of a case: behaviours, subquery filters and
    /// aggregate arguments.
    Event,
    /// Select item of an event-level subquery: aggregates turn event-level
    /// input into case-level values.
    SubquerySelect,
    /// After grouping: only group keys and aggregates.
    Grouped,
}

struct Behaviour {
    name: String,
    expr: TypedExpr,
}

struct Analyzer<'a> {
    schema: &'a Schema,
    flat: bool,
    behaviours: Vec<Behaviour>,
    slots: Vec<EventAggregate>,
    subquery_filter: Option<TypedExpr>,
    group_keys: Vec<(Expr, TypedExpr)>,
    aggregates: Vec<AggregateCall>,
}

/// Analyzes a parsed query against the schema of the log it reads.
pub fn analyze(ast: &QueryAst, log_id: &str, schema: &Schema) -> Result<LogicalPlan> {
    let source = ast.from.as_ref().ok_or_else(|| {
        AnalyzeError::new(K::UnknownLog, ast.span, "query has no FROM clause")
    })?;
    let mut a = Analyzer::new(schema, source.is_flattened());
    a.query(ast, log_id)
}

/// Types a standalone expression. At `Level::Event` aggregates are allowed
/// and reduce event-level input to a case-level value, as inside an
/// event-level subquery.
pub fn type_of(expr: &Expr, schema: &Schema, level: Level) -> Result<TypedExpr> {
    let mut a = Analyzer::new(schema, false);
    match level {
        Level::Case => a.expr(expr, Ctx::Row),
        Level::Event => a.expr(expr, Ctx::SubquerySelect),
    }
}

fn err(kind: K, span: Span, message: impl Into<String>) -> AnalyzeError {
    AnalyzeError::new(kind, span, message)
}

fn contains_aggregate(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Function { name, args, .. } => {
            AggFunc::lookup(name).is_some() || args.iter().any(contains_aggregate)
        }
        ExprKind::Subquery(_) | ExprKind::Matches { .. } => false,
        ExprKind::Column { .. } | ExprKind::Literal(_) | ExprKind::Star => false,
        ExprKind::Unary { expr, .. } | ExprKind::IsNull { expr, .. } => contains_aggregate(expr),
        ExprKind::Binary { left, right, .. } => contains_aggregate(left) || contains_aggregate(right),
        ExprKind::InList { expr, list, .. } => {
            contains_aggregate(expr) || list.iter().any(contains_aggregate)
        }
    }
}

fn split_and(e: &Expr, out: &mut Vec<Expr>) {
    match &e.kind {
        ExprKind::Binary { op: BinaryOp::And, left, right } => {
            split_and(left, out);
            split_and(right, out);
        }
        _ => out.push(e.clone()),
    }
}

/// Replaces string literal atoms with references to generated behaviours.
fn desugar_literals(p: &Pattern, literals: &mut Vec<(String, String)>, taken: &mut Vec<String>) -> Pattern {
    let mut rec = |q: &Pattern| desugar_literals(q, literals, taken);
    match p {
        Pattern::Literal { value, span } => {
            let mut name = format!("'{value}'");
            let mut k = 1;
            while taken.iter().any(|t| t.eq_ignore_ascii_case(&name)) {
                k += 1;
                name = format!("'{value}'#{k}");
            }
            taken.push(name.clone());
            literals.push((name.clone(), value.clone()));
            Pattern::Behaviour { name, quoted: true, span: *span }
        }
        Pattern::Behaviour { .. } | Pattern::Any => p.clone(),
        Pattern::Not(x) => Pattern::Not(Box::new(rec(x))),
        Pattern::Repeat(x) => Pattern::Repeat(Box::new(rec(x))),
        Pattern::Concat(a, b) => Pattern::Concat(Box::new(rec(a)), Box::new(rec(b))),
        Pattern::DirectlyFollows(a, b) => Pattern::DirectlyFollows(Box::new(rec(a)), Box::new(rec(b))),
        Pattern::EventuallyFollows(a, b) => Pattern::EventuallyFollows(Box::new(rec(a)), Box::new(rec(b))),
        Pattern::Alternation(items) => Pattern::Alternation(items.iter().map(rec).collect()),
        Pattern::Anchored { start, end, inner, span } => {
            Pattern::Anchored { start: *start, end: *end, inner: Box::new(rec(inner)), span: *span }
        }
    }
}

fn behaviour_refs(p: &Pattern, out: &mut Vec<(String, bool, Span)>) {
    match p {
        Pattern::Behaviour { name, quoted, span } => out.push((name.clone(), *quoted, *span)),
        Pattern::Literal { .. } | Pattern::Any => {}
        Pattern::Not(x) | Pattern::Repeat(x) | Pattern::Anchored { inner: x, .. } => behaviour_refs(x, out),
        Pattern::Concat(a, b) | Pattern::DirectlyFollows(a, b) | Pattern::EventuallyFollows(a, b) => {
            behaviour_refs(a, out);
            behaviour_refs(b, out);
        }
        Pattern::Alternation(items) => items.iter().for_each(|i| behaviour_refs(i, out)),
    }
}

/// Whether an integral number literal can stand for a Timestamp/Duration.
fn coerce_literal(e: &TypedExpr, to: ScalarType) -> Option<TypedExpr> {
    if !matches!(to, ScalarType::Timestamp | ScalarType::Duration) {
        return None;
    }
    match e.kind {
        TExpr::Literal(Value::Number(n)) if n.fract() == 0.0 && n.abs() < 9.0e15 => {
            let v = if to == ScalarType::Timestamp { Value::Timestamp(n as i64) } else { Value::Duration(n as i64) };
            Some(TypedExpr::literal(v, to))
        }
        TExpr::Negate(ref inner) => coerce_literal(inner, to).map(|c| {
            let TExpr::Literal(v) = c.kind else { unreachable!() };
            let v = match v {
                Value::Timestamp(x) => Value::Timestamp(-x),
                Value::Duration(x) => Value::Duration(-x),
                other => other,
            };
            TypedExpr::literal(v, to)
        }),
        _ => None,
    }
}

fn arith_type(op: ArithOp, l: ScalarType, r: ScalarType) -> Option<ScalarType> {
    use ScalarType::*;
    match (op, l, r) {
        (_, Number, Number) => Some(Number),
        (ArithOp::Add, Timestamp, Duration) | (ArithOp::Add, Duration, Timestamp) => Some(Timestamp),
        (ArithOp::Sub, Timestamp, Duration) => Some(Timestamp),
        (ArithOp::Sub, Timestamp, Timestamp) => Some(Duration),
        (ArithOp::Add | ArithOp::Sub, Duration, Duration) => Some(Duration),
        _ => None,
    }
}

impl<'a> Analyzer<'a> {
    fn new(schema: &'a Schema, flat: bool) -> Analyzer<'a> {
        Analyzer {
            schema,
            flat,
            behaviours: Vec::new(),
            slots: Vec::new(),
            subquery_filter: None,
            group_keys: Vec::new(),
            aggregates: Vec::new(),
        }
    }

    fn query(&mut self, ast: &QueryAst, log_id: &str) -> Result<LogicalPlan> {
        for def in &ast.behaviours {
            self.define_behaviour(&def.name, &def.expr, def.span)?;
        }

        let mut pattern_filters = Vec::new();
        let mut predicate = None;
        if let Some(selection) = &ast.selection {
            predicate = self.selection(selection, &mut pattern_filters)?;
        }

        let aggregating = !ast.group_by.is_empty()
            || ast.select.iter().any(|s| contains_aggregate(&s.expr))
            || ast.order_by.iter().any(|o| contains_aggregate(&o.expr));

        for key in &ast.group_by {
            let key_ast = self.alias_target(key, ast).unwrap_or(key).clone();
            let te = self.expr(&key_ast, Ctx::Row)?;
            self.require_row_level(&te, key.span)?;
            self.group_keys.push((key_ast, te));
        }
        let item_ctx = if aggregating { Ctx::Grouped } else { Ctx::Row };

        let mut exprs = Vec::new();
        let mut output = Vec::new();
        for item in &ast.select {
            if let ExprKind::Star = item.expr.kind {
                if aggregating {
                    return Err(err(K::InvalidAggregate, item.expr.span, "SELECT * cannot be combined with grouping"));
                }
                let levels: &[Level] = if self.flat { &[Level::Case, Level::Event] } else { &[Level::Case] };
                for &level in levels {
                    for (index, attr) in self.schema.attributes(level).iter().enumerate() {
                        let r = ColumnRef { level, index, name: attr.name.clone() };
                        exprs.push(TypedExpr::new(TExpr::Column(r), attr.ty, level));
                        output.push(ResultColumn::new(attr.name.clone(), attr.ty));
                    }
                }
                continue;
            }
            let te = self.expr(&item.expr, item_ctx)?;
            self.require_row_level(&te, item.expr.span)?;
            let name = match (&item.alias, &te.kind) {
                (Some(alias), _) => alias.clone(),
                (None, TExpr::Column(c)) => c.name.clone(),
                _ => item.expr.to_string(),
            };
            output.push(ResultColumn::new(name, te.ty));
            exprs.push(te);
        }

        let mut sort_keys = Vec::new();
        for item in &ast.order_by {
            let expr = match self.order_target(&item.expr, ast, &exprs)? {
                Some(te) => te,
                None => {
                    let te = self.expr(&item.expr, item_ctx)?;
                    self.require_row_level(&te, item.expr.span)?;
                    te
                }
            };
            sort_keys.push(SortKey { expr, descending: item.descending });
        }

        let all: Vec<(Level, usize)> = [Level::Case, Level::Event]
            .iter()
            .flat_map(|&l| (0..self.schema.attributes(l).len()).map(move |i| (l, i)))
            .collect();
        let mut plan = LogicalPlan::Scan { log_id: log_id.to_string(), columns: all };
        if self.flat {
            plan = LogicalPlan::Flatten { input: Box::new(plan) };
        }
        if !self.slots.is_empty() {
            let aggregates = std::mem::take(&mut self.slots);
            plan = LogicalPlan::EventSubqueryEval { input: Box::new(plan), aggregates };
        }
        for spec in pattern_filters {
            plan = LogicalPlan::PatternFilter { input: Box::new(plan), spec };
        }
        if let Some(predicate) = predicate {
            plan = LogicalPlan::Filter { input: Box::new(plan), predicate };
        }
        if aggregating {
            let keys = self.group_keys.iter().map(|(_, te)| te.clone()).collect();
            let aggregates = std::mem::take(&mut self.aggregates);
            plan = LogicalPlan::Aggregate { input: Box::new(plan), keys, aggregates };
        }
        if !sort_keys.is_empty() {
            plan = LogicalPlan::Sort { input: Box::new(plan), keys: sort_keys };
        }
        plan = LogicalPlan::Project { input: Box::new(plan), exprs, output };
        if let Some(n) = ast.limit {
            plan = LogicalPlan::Limit { input: Box::new(plan), n };
        }
        Ok(plan)
    }

    fn define_behaviour(&mut self, name: &str, expr: &Expr, span: Span) -> Result<()> {
        if self.behaviours.iter().any(|b| b.name.eq_ignore_ascii_case(name)) {
            return Err(err(K::DuplicateBehaviour, span, format!("behaviour '{name}' is defined twice")));
        }
        let collides = [Level::Case, Level::Event]
            .iter()
            .any(|&l| self.schema.index_of(l, name).is_some());
        if collides {
            return Err(err(
                K::DuplicateBehaviour,
                span,
                format!("behaviour name '{name}' collides with a column name"),
            ));
        }
        let te = self.expr(expr, Ctx::Event)?;
        if te.ty != ScalarType::Boolean {
            return Err(err(
                K::NonBooleanBehaviour,
                expr.span,
                format!("behaviour '{name}' must be a Boolean expression, found {}", te.ty),
            ));
        }
        self.behaviours.push(Behaviour { name: name.to_string(), expr: te });
        Ok(())
    }

    /// Top-level `WHERE`. On the nested case table, `MATCHES` conjuncts
    /// become pattern filters and event-level conjuncts are combined into
    /// one predicate that some single event of the case must satisfy.
    fn selection(
        &mut self,
        selection: &Expr,
        pattern_filters: &mut Vec<Arc<MatchSpec>>,
    ) -> Result<Option<TypedExpr>> {
        if self.flat {
            let te = self.expr(selection, Ctx::Row)?;
            self.require_boolean(&te, selection.span, "WHERE")?;
            return Ok(Some(te));
        }
        let mut conjuncts = Vec::new();
        split_and(selection, &mut conjuncts);
        let mut case_preds = Vec::new();
        let mut event_preds = Vec::new();
        for c in &conjuncts {
            let te = self.expr(c, Ctx::Row)?;
            self.require_boolean(&te, c.span, "WHERE")?;
            match te.kind {
                TExpr::Matches(spec) => pattern_filters.push(spec),
                _ if te.level == Level::Event => event_preds.push(te),
                _ => case_preds.push(te),
            }
        }
        if let Some(pred) = TypedExpr::and_all(event_preds) {
            case_preds.push(TypedExpr::new(TExpr::Exists(Box::new(pred)), ScalarType::Boolean, Level::Case));
        }
        Ok(TypedExpr::and_all(case_preds))
    }

    fn require_boolean(&self, te: &TypedExpr, span: Span, clause: &str) -> Result<()> {
        if te.ty != ScalarType::Boolean {
            return Err(err(K::TypeError, span, format!("{clause} requires a Boolean expression, found {}", te.ty)));
        }
        Ok(())
    }

    /// Outside subqueries, the nested case table only yields case-level
    /// values.
    fn require_row_level(&self, te: &TypedExpr, span: Span) -> Result<()> {
        if !self.flat && te.level == Level::Event {
            return Err(err(
                K::LevelError,
                span,
                "event-level expression used at case level; aggregate it in an event-level subquery such as (SELECT LAST(x))",
            ));
        }
        Ok(())
    }

    /// The select item a `GROUP BY` or `ORDER BY` name refers to, if it is an
    /// alias rather than a column.
    fn alias_target<'q>(&self, e: &Expr, ast: &'q QueryAst) -> Option<&'q Expr> {
        let ExprKind::Column { name, quoted: false } = &e.kind else { return None };
        if self.resolve_column(name, Ctx::Row).is_some() {
            return None;
        }
        ast.select
            .iter()
            .find(|s| s.alias.as_deref().is_some_and(|a| a.eq_ignore_ascii_case(name)))
            .map(|s| &s.expr)
    }

    /// `ORDER BY` by select position or alias.
    fn order_target(&self, e: &Expr, ast: &QueryAst, exprs: &[TypedExpr]) -> Result<Option<TypedExpr>> {
        if let ExprKind::Literal(Literal::Number(n)) = e.kind {
            if n.fract() == 0.0 && n >= 1.0 && (n as usize) <= exprs.len() {
                return Ok(Some(exprs[n as usize - 1].clone()));
            }
            return Err(err(K::UnknownColumn, e.span, format!("ORDER BY position {n} is out of range")));
        }
        if let Some(target) = self.alias_target(e, ast) {
            let pos = ast.select.iter().position(|s| std::ptr::eq(&s.expr, target));
            if let Some(i) = pos {
                if !ast.select.iter().take(i).any(|s| matches!(s.expr.kind, ExprKind::Star)) {
                    return Ok(Some(exprs[i].clone()));
                }
            }
        }
        Ok(None)
    }

    fn resolve_column(&self, name: &str, ctx: Ctx) -> Option<ColumnRef> {
        let order: [Level; 2] = match ctx {
            Ctx::Event | Ctx::SubquerySelect => [Level::Event, Level::Case],
            _ => [Level::Case, Level::Event],
        };
        order.iter().find_map(|&level| {
            self.schema.index_of(level, name).map(|index| ColumnRef {
                level,
                index,
                name: self.schema.attributes(level)[index].name.clone(),
            })
        })
    }

    fn group_key(&self, e: &Expr) -> Option<TypedExpr> {
        let k = self.group_keys.iter().position(|(ast, _)| ast == e)?;
        let ty = self.group_keys[k].1.ty;
        Some(TypedExpr::new(TExpr::Input(k), ty, Level::Case))
    }

    fn expr(&mut self, e: &Expr, ctx: Ctx) -> Result<TypedExpr> {
        if ctx == Ctx::Grouped {
            if let Some(te) = self.group_key(e) {
                return Ok(te);
            }
        }
        match &e.kind {
            ExprKind::Column { name, .. } => {
                if ctx == Ctx::Grouped {
                    return Err(err(
                        K::InvalidAggregate,
                        e.span,
                        format!("column '{name}' must appear in GROUP BY or inside an aggregate"),
                    ));
                }
                let r = self
                    .resolve_column(name, ctx)
                    .ok_or_else(|| err(K::UnknownColumn, e.span, format!("unknown column '{name}'")))?;
                let ty = self.schema.attributes(r.level)[r.index].ty;
                let level = r.level;
                Ok(TypedExpr::new(TExpr::Column(r), ty, level))
            }
            ExprKind::Literal(lit) => Ok(match lit {
                Literal::String(s) => TypedExpr::literal(Value::string(s), ScalarType::String),
                Literal::Number(n) => TypedExpr::literal(Value::Number(*n), ScalarType::Number),
                Literal::Boolean(b) => TypedExpr::literal(Value::Boolean(*b), ScalarType::Boolean),
            }),
            ExprKind::Star => Err(err(K::TypeError, e.span, "'*' is only allowed as a select item or in COUNT(*)")),
            ExprKind::Unary { op, expr } => {
                let inner = self.expr(expr, ctx)?;
                let level = inner.level;
                match op {
                    UnaryOp::Neg => {
                        if !matches!(inner.ty, ScalarType::Number | ScalarType::Duration) {
                            return Err(err(K::TypeError, e.span, format!("cannot negate {}", inner.ty)));
                        }
                        let ty = inner.ty;
                        Ok(TypedExpr::new(TExpr::Negate(Box::new(inner)), ty, level))
                    }
                    UnaryOp::Not => {
                        self.require_boolean(&inner, expr.span, "NOT")?;
                        Ok(TypedExpr::new(TExpr::Not(Box::new(inner)), ScalarType::Boolean, level))
                    }
                }
            }
            ExprKind::Binary { op, left, right } => self.binary(e, *op, left, right, ctx),
            ExprKind::InList { expr, list, negated } => {
                let subject = self.expr(expr, ctx)?;
                let mut level = subject.level;
                let mut items = Vec::new();
                for item in list {
                    let te = self.expr(item, ctx)?;
                    let te = self.unify_with(te, subject.ty, item.span)?;
                    level = level.max(te.level);
                    items.push(te);
                }
                Ok(TypedExpr::new(
                    TExpr::InList { expr: Box::new(subject), list: items, negated: *negated },
                    ScalarType::Boolean,
                    level,
                ))
            }
            ExprKind::IsNull { expr, negated } => {
                let inner = self.expr(expr, ctx)?;
                let level = inner.level;
                Ok(TypedExpr::new(
                    TExpr::IsNull { expr: Box::new(inner), negated: *negated },
                    ScalarType::Boolean,
                    level,
                ))
            }
            ExprKind::Function { name, distinct, args } => match AggFunc::lookup(name) {
                Some(func) => self.aggregate(e, func, *distinct, args, ctx),
                None => self.scalar_function(e, name, *distinct, args, ctx),
            },
            ExprKind::Subquery(q) => self.subquery(e, q, ctx),
            ExprKind::Matches { subject, pattern } => self.matches(e, subject.as_deref(), pattern, ctx),
        }
    }

    /// Converts `te` to `ty` when it is a coercible literal; otherwise the
    /// types must already agree.
    fn unify_with(&self, te: TypedExpr, ty: ScalarType, span: Span) -> Result<TypedExpr> {
        if te.ty == ty {
            return Ok(te);
        }
        coerce_literal(&te, ty).ok_or_else(|| {
            err(K::TypeError, span, format!("expected {ty}, found {}", te.ty))
        })
    }

    fn binary(&mut self, e: &Expr, op: BinaryOp, left: &Expr, right: &Expr, ctx: Ctx) -> Result<TypedExpr> {
        let mut l = self.expr(left, ctx)?;
        let mut r = self.expr(right, ctx)?;
        let level = l.level.max(r.level);
        let boxed = |l: TypedExpr, r: TypedExpr| (Box::new(l), Box::new(r));
        match op {
            BinaryOp::And | BinaryOp::Or => {
                self.require_boolean(&l, left.span, op.symbol())?;
                self.require_boolean(&r, right.span, op.symbol())?;
                let (a, b) = boxed(l, r);
                let kind = if op == BinaryOp::And { TExpr::And(a, b) } else { TExpr::Or(a, b) };
                Ok(TypedExpr::new(kind, ScalarType::Boolean, level))
            }
            BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Div => {
                let aop = match op {
                    BinaryOp::Add => ArithOp::Add,
                    BinaryOp::Sub => ArithOp::Sub,
                    BinaryOp::Mul => ArithOp::Mul,
                    _ => ArithOp::Div,
                };
                let ty = arith_type(aop, l.ty, r.ty).ok_or_else(|| {
                    err(K::TypeError, e.span, format!("cannot apply '{}' to {} and {}", aop.symbol(), l.ty, r.ty))
                })?;
                let (left, right) = boxed(l, r);
                Ok(TypedExpr::new(TExpr::Arith { op: aop, left, right }, ty, level))
            }
            _ => {
                let cmp = match op {
                    BinaryOp::Eq => CmpOp::Eq,
                    BinaryOp::NotEq => CmpOp::NotEq,
                    BinaryOp::Lt => CmpOp::Lt,
                    BinaryOp::LtEq => CmpOp::LtEq,
                    BinaryOp::Gt => CmpOp::Gt,
                    _ => CmpOp::GtEq,
                };
                if l.ty != r.ty {
                    if let Some(c) = coerce_literal(&r, l.ty) {
                        r = c;
                    } else if let Some(c) = coerce_literal(&l, r.ty) {
                        l = c;
                    } else {
                        return Err(err(K::TypeError, e.span, format!("cannot compare {} with {}", l.ty, r.ty)));
                    }
                }
                let (left, right) = boxed(l, r);
                Ok(TypedExpr::new(
                    TExpr::Compare { op: cmp, left, right, ignore_case: false },
                    ScalarType::Boolean,
                    level,
                ))
            }
        }
    }

    fn scalar_function(&mut self, e: &Expr, name: &str, distinct: bool, args: &[Expr], ctx: Ctx) -> Result<TypedExpr> {
        let func = ScalarFunc::lookup(name)
            .ok_or_else(|| err(K::UnknownFunction, e.span, format!("unknown function '{name}'")))?;
        if distinct {
            return Err(err(K::TypeError, e.span, format!("DISTINCT is not allowed in {}", func.name())));
        }
        let mut typed = Vec::new();
        for a in args {
            typed.push(self.expr(a, ctx)?);
        }
        let level = typed.iter().map(|t| t.level).max().unwrap_or(Level::Case);
        let arity_err = || err(K::TypeError, e.span, format!("{} takes one argument", func.name()));
        let ty = match func {
            ScalarFunc::Lower | ScalarFunc::Upper | ScalarFunc::Length => {
                let [arg] = typed.as_slice() else { return Err(arity_err()) };
                if arg.ty != ScalarType::String {
                    return Err(err(K::TypeError, e.span, format!("{} expects String, found {}", func.name(), arg.ty)));
                }
                if func == ScalarFunc::Length { ScalarType::Number } else { ScalarType::String }
            }
            ScalarFunc::Abs => {
                let [arg] = typed.as_slice() else { return Err(arity_err()) };
                if !matches!(arg.ty, ScalarType::Number | ScalarType::Duration) {
                    return Err(err(K::TypeError, e.span, format!("ABS expects Number or Duration, found {}", arg.ty)));
                }
                arg.ty
            }
            ScalarFunc::Coalesce => {
                if typed.is_empty() {
                    return Err(err(K::TypeError, e.span, "COALESCE takes at least one argument"));
                }
                let ty = typed
                    .iter()
                    .find(|t| !matches!(t.kind, TExpr::Literal(_)))
                    .unwrap_or(&typed[0])
                    .ty;
                typed = typed
                    .into_iter()
                    .zip(args)
                    .map(|(t, a)| self.unify_with(t, ty, a.span))
                    .collect::<Result<_>>()?;
                ty
            }
        };
        Ok(TypedExpr::new(TExpr::Scalar { func, args: typed }, ty, level))
    }

    fn aggregate(&mut self, e: &Expr, func: AggFunc, distinct: bool, args: &[Expr], ctx: Ctx) -> Result<TypedExpr> {
        let name = func.name();
        let (func, arg_ast) = match args {
            [a] if matches!(a.kind, ExprKind::Star) => {
                if func != AggFunc::Count || distinct {
                    return Err(err(K::TypeError, a.span, format!("{name}(*) is not supported")));
                }
                (AggFunc::CountStar, None)
            }
            [a] => (func, Some(a)),
            _ => return Err(err(K::TypeError, e.span, format!("{name} takes exactly one argument"))),
        };
        let arg_ctx = match ctx {
            Ctx::Grouped => Ctx::Row,
            Ctx::SubquerySelect => Ctx::Event,
            Ctx::Row | Ctx::Event => {
                let msg = match ctx {
                    Ctx::Event => format!("{name} cannot be nested inside another aggregate or used in a behaviour"),
                    _ => format!("{name} is not allowed here"),
                };
                return Err(err(K::InvalidAggregate, e.span, msg));
            }
        };
        if ctx == Ctx::Grouped && matches!(func, AggFunc::First | AggFunc::Last) {
            return Err(err(
                K::InvalidAggregate,
                e.span,
                format!("{name} is only allowed inside an event-level subquery"),
            ));
        }
        let arg = match arg_ast {
            Some(a) => {
                let te = self.expr(a, arg_ctx)?;
                if arg_ctx == Ctx::Row {
                    self.require_row_level(&te, a.span)?;
                }
                Some(te)
            }
            None => None,
        };
        let ty = match (func, arg.as_ref().map(|a| a.ty)) {
            (AggFunc::Count | AggFunc::CountStar, _) => ScalarType::Number,
            (AggFunc::Sum | AggFunc::Avg, Some(t @ (ScalarType::Number | ScalarType::Duration))) => t,
            (AggFunc::Sum | AggFunc::Avg, Some(t)) => {
                return Err(err(K::TypeError, e.span, format!("{name} expects Number or Duration, found {t}")))
            }
            (_, Some(t)) => t,
            (_, None) => unreachable!("only COUNT takes *"),
        };
        match ctx {
            Ctx::Grouped => {
                self.aggregates.push(AggregateCall { func, arg, distinct, ty });
                let index = self.group_keys.len() + self.aggregates.len() - 1;
                Ok(TypedExpr::new(TExpr::Input(index), ty, Level::Case))
            }
            _ => {
                self.slots.push(EventAggregate {
                    func,
                    arg,
                    filter: self.subquery_filter.clone(),
                    distinct,
                    strategy: AggStrategy::Scan,
                    ty,
                });
                Ok(TypedExpr::new(TExpr::EventAgg(self.slots.len() - 1), ty, Level::Case))
            }
        }
    }

    fn subquery(&mut self, e: &Expr, q: &QueryAst, ctx: Ctx) -> Result<TypedExpr> {
        if self.flat {
            return Err(err(K::InvalidSubquery, e.span, "event-level subqueries require the nested case table, not FLATTEN"));
        }
        match ctx {
            Ctx::Row => {}
            Ctx::Grouped => {
                return Err(err(K::InvalidAggregate, e.span, "subquery must appear in GROUP BY or inside an aggregate"))
            }
            Ctx::Event | Ctx::SubquerySelect => {
                return Err(err(K::InvalidSubquery, e.span, "event-level subqueries cannot be nested"))
            }
        }
        match &q.from {
            None => {}
            Some(Source::Named { name, .. }) if name.eq_ignore_ascii_case("events") => {}
            Some(_) => return Err(err(K::InvalidSubquery, q.span, "an event-level subquery reads FROM events")),
        }
        let unsupported = if !q.behaviours.is_empty() {
            Some("BEHAVIOUR")
        } else if !q.group_by.is_empty() {
            Some("GROUP BY")
        } else if !q.order_by.is_empty() {
            Some("ORDER BY")
        } else if q.limit.is_some() {
            Some("LIMIT")
        } else {
            None
        };
        if let Some(clause) = unsupported {
            return Err(err(K::InvalidSubquery, q.span, format!("{clause} is not supported in event-level subqueries")));
        }
        let [item] = q.select.as_slice() else {
            return Err(err(K::InvalidSubquery, q.span, "an event-level subquery selects exactly one expression"));
        };
        if matches!(item.expr.kind, ExprKind::Star) {
            return Err(err(K::NonAggregatedSubquery, item.expr.span, "an event-level subquery must aggregate to one value"));
        }
        let filter = match &q.selection {
            Some(w) => {
                let te = self.expr(w, Ctx::Event)?;
                self.require_boolean(&te, w.span, "WHERE")?;
                Some(te)
            }
            None => None,
        };
        let saved = std::mem::replace(&mut self.subquery_filter, filter);
        let result = self.expr(&item.expr, Ctx::SubquerySelect);
        self.subquery_filter = saved;
        let result = result?;
        if result.level == Level::Event {
            return Err(err(
                K::NonAggregatedSubquery,
                e.span,
                "an event-level subquery must aggregate its events to a single value",
            ));
        }
        Ok(result)
    }

    fn matches(&mut self, e: &Expr, subject: Option<&Expr>, pattern: &Pattern, ctx: Ctx) -> Result<TypedExpr> {
        if self.flat {
            return Err(err(K::MatchesOnFlattened, e.span, "MATCHES needs the nested case table, not FLATTEN"));
        }
        match ctx {
            Ctx::Row => {}
            Ctx::Grouped => {
                return Err(err(K::InvalidAggregate, e.span, "MATCHES must appear in GROUP BY or inside an aggregate"))
            }
            Ctx::Event | Ctx::SubquerySelect => {
                return Err(err(K::LevelError, e.span, "MATCHES tests whole cases and cannot be used on single events"))
            }
        }
        let subject = match subject {
            Some(s) => self.expr(s, Ctx::Event)?,
            None => {
                let index = self.schema.event_name_index();
                let r = ColumnRef { level: Level::Event, index, name: EVENT_NAME.to_string() };
                TypedExpr::new(TExpr::Column(r), ScalarType::String, Level::Event)
            }
        };

        let mut refs = Vec::new();
        behaviour_refs(pattern, &mut refs);
        let user_names: Vec<String> = self.behaviours.iter().map(|b| b.name.clone()).collect();
        let mut names = Vec::new();
        let mut exprs = Vec::new();
        for (name, quoted, span) in refs {
            let i = pattern::resolve_behaviour(&user_names, &name, quoted)
                .ok_or_else(|| err(K::UnknownBehaviour, span, format!("unknown behaviour '{name}'")))?;
            if !names.contains(&user_names[i]) {
                names.push(user_names[i].clone());
                exprs.push(self.behaviours[i].expr.clone());
            }
        }
        let mut literals = Vec::new();
        let mut taken = names.clone();
        let lowered = desugar_literals(pattern, &mut literals, &mut taken);
        for (name, value) in literals {
            if subject.ty != ScalarType::String {
                return Err(err(
                    K::TypeError,
                    e.span,
                    format!("pattern literal '{value}' compares with a {} subject", subject.ty),
                ));
            }
            let pred = TExpr::Compare {
                op: CmpOp::Eq,
                left: Box::new(subject.clone()),
                right: Box::new(TypedExpr::literal(Value::string(&value), ScalarType::String)),
                ignore_case: true,
            };
            names.push(name);
            exprs.push(TypedExpr::new(pred, ScalarType::Boolean, Level::Event));
        }
        let compiled = pattern::compile(&lowered, &names).map_err(|c| match c {
            CompileError::UnknownBehaviour { name, span } => {
                err(K::UnknownBehaviour, span, format!("unknown behaviour '{name}'"))
            }
            other => err(K::TypeError, e.span, other.to_string()),
        })?;
        let spec = MatchSpec { text: pattern.to_string(), names, behaviours: exprs, pattern: compiled };
        Ok(TypedExpr::new(TExpr::Matches(Arc::new(spec)), ScalarType::Boolean, Level::Case))
    }
}
