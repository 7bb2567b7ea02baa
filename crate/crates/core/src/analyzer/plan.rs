use std::fmt;
use std::sync::Arc;

use super::expr::{AggFunc, MatchSpec, TypedExpr};
use crate::result::ResultColumn;
use crate::types::{Level, ScalarType};

/// How an event-level aggregate is computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AggStrategy {
    /// Generic per-case evaluation. FIRST/LAST order the case's events by
    /// `end_time` before picking an end.
    Scan,
    /// FIRST/LAST read the boundary event of the case range directly,
    /// relying on events being stored in order.
    Positional,
}

/// Per-case aggregate of an event-level subquery.
#[derive(Clone, Debug)]
pub struct EventAggregate {
    pub func: AggFunc,
    /// `None` for `COUNT(*)`.
    pub arg: Option<TypedExpr>,
    /// The subquery's `WHERE`, restricting which events are aggregated.
    pub filter: Option<TypedExpr>,
    pub distinct: bool,
    pub strategy: AggStrategy,
    pub ty: ScalarType,
}

/// Aggregate over the rows reaching an `Aggregate` operator.
#[derive(Clone, Debug)]
pub struct AggregateCall {
    pub func: AggFunc,
    pub arg: Option<TypedExpr>,
    pub distinct: bool,
    pub ty: ScalarType,
}

#[derive(Clone, Debug)]
pub struct SortKey {
    pub expr: TypedExpr,
    pub descending: bool,
}

#[derive(Clone, Debug)]
pub enum LogicalPlan {
    /// Case table of a log. `columns` lists the columns to snapshot.
    Scan { log_id: String, columns: Vec<(Level, usize)> },
    /// One row per event with case attributes repeated.
    Flatten { input: Box<LogicalPlan> },
    /// Computes per-case aggregates of event-level subqueries into slots.
    EventSubqueryEval { input: Box<LogicalPlan>, aggregates: Vec<EventAggregate> },
    /// Keeps the cases matching the pattern.
    PatternFilter { input: Box<LogicalPlan>, spec: Arc<MatchSpec> },
    Filter { input: Box<LogicalPlan>, predicate: TypedExpr },
    /// Output: group keys followed by aggregates.
    Aggregate { input: Box<LogicalPlan>, keys: Vec<TypedExpr>, aggregates: Vec<AggregateCall> },
    Sort { input: Box<LogicalPlan>, keys: Vec<SortKey> },
    Project { input: Box<LogicalPlan>, exprs: Vec<TypedExpr>, output: Vec<ResultColumn> },
    Limit { input: Box<LogicalPlan>, n: u64 },
}

impl LogicalPlan {
    pub fn input(&self) -> Option<&LogicalPlan> {
        match self {
            LogicalPlan::Scan { .. } => None,
            LogicalPlan::Flatten { input }
            | LogicalPlan::EventSubqueryEval { input, .. }
            | LogicalPlan::PatternFilter { input, .. }
            | LogicalPlan::Filter { input, .. }
            | LogicalPlan::Aggregate { input, .. }
            | LogicalPlan::Sort { input, .. }
            | LogicalPlan::Project { input, .. }
            | LogicalPlan::Limit { input, .. } => Some(input),
        }
    }

    pub fn input_mut(&mut self) -> Option<&mut Box<LogicalPlan>> {
        match self {
            LogicalPlan::Scan { .. } => None,
            LogicalPlan::Flatten { input }
            | LogicalPlan::EventSubqueryEval { input, .. }
            | LogicalPlan::PatternFilter { input, .. }
            | LogicalPlan::Filter { input, .. }
            | LogicalPlan::Aggregate { input, .. }
            | LogicalPlan::Sort { input, .. }
            | LogicalPlan::Project { input, .. }
            | LogicalPlan::Limit { input, .. } => Some(input),
        }
    }

    /// Operator name, as shown in plan output.
    pub fn name(&self) -> &'static str {
        match self {
            LogicalPlan::Scan { .. } => "Scan",
            LogicalPlan::Flatten { .. } => "Flatten",
            LogicalPlan::EventSubqueryEval { .. } => "EventSubqueryEval",
            LogicalPlan::PatternFilter { .. } => "PatternFilter",
            LogicalPlan::Filter { .. } => "Filter",
            LogicalPlan::Aggregate { .. } => "Aggregate",
            LogicalPlan::Sort { .. } => "Sort",
            LogicalPlan::Project { .. } => "Project",
            LogicalPlan::Limit { .. } => "Limit",
        }
    }

    /// Operator names from the root down.
    pub fn operators(&self) -> Vec<&'static str> {
        let mut out = vec![self.name()];
        let mut node = self;
        while let Some(input) = node.input() {
            out.push(input.name());
            node = input;
        }
        out
    }

    /// Result columns produced by the plan root.
    pub fn output(&self) -> &[ResultColumn] {
        match self {
            LogicalPlan::Project { output, .. } => output,
            other => other.input().map_or(&[], LogicalPlan::output),
        }
    }

    /// Every expression held by this node (not its input).
    pub fn expressions(&self) -> Vec<&TypedExpr> {
        match self {
            LogicalPlan::Scan { .. } | LogicalPlan::Flatten { .. } | LogicalPlan::Limit { .. } => vec![],
            LogicalPlan::EventSubqueryEval { aggregates, .. } => aggregates
                .iter()
                .flat_map(|a| a.arg.iter().chain(a.filter.iter()))
                .collect(),
            LogicalPlan::PatternFilter { spec, .. } => spec.behaviours.iter().collect(),
            LogicalPlan::Filter { predicate, .. } => vec![predicate],
            LogicalPlan::Aggregate { keys, aggregates, .. } => {
                keys.iter().chain(aggregates.iter().filter_map(|a| a.arg.as_ref())).collect()
            }
            LogicalPlan::Sort { keys, .. } => keys.iter().map(|k| &k.expr).collect(),
            LogicalPlan::Project { exprs, .. } => exprs.iter().collect(),
        }
    }

    /// Columns referenced anywhere in the plan, sorted and deduplicated.
    pub fn referenced_columns(&self) -> Vec<(Level, usize)> {
        let mut out = Vec::new();
        let mut node = Some(self);
        while let Some(n) = node {
            for e in n.expressions() {
                e.columns(&mut out);
            }
            node = n.input();
        }
        out.sort();
        out.dedup();
        out
    }

    pub fn scan_columns(&self) -> &[(Level, usize)] {
        match self {
            LogicalPlan::Scan { columns, .. } => columns,
            other => other.input().map_or(&[], LogicalPlan::scan_columns),
        }
    }

    fn fmt_node(&self, f: &mut fmt::Formatter<'_>, depth: usize) -> fmt::Result {
        let pad = "  ".repeat(depth);
        write!(f, "{pad}{}", self.name())?;
        match self {
            LogicalPlan::Scan { log_id, columns } => {
                write!(f, " {log_id} [")?;
                for (i, (level, idx)) in columns.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{level}#{idx}")?;
                }
                f.write_str("]")?;
            }
            LogicalPlan::Flatten { .. } => {}
            LogicalPlan::EventSubqueryEval { aggregates, .. } => {
                for (slot, a) in aggregates.iter().enumerate() {
                    write!(f, " ${slot}={}(", a.func.name())?;
                    if a.distinct {
                        f.write_str("DISTINCT ")?;
                    }
                    match &a.arg {
                        Some(arg) => write!(f, "{arg}")?,
                        None => f.write_str("*")?,
                    }
                    f.write_str(")")?;
                    if let Some(filter) = &a.filter {
                        write!(f, " WHERE {filter}")?;
                    }
                    if a.strategy == AggStrategy::Positional {
                        f.write_str(" positional")?;
                    }
                }
            }
            LogicalPlan::PatternFilter { spec, .. } => write!(f, " ({})", spec.text)?,
            LogicalPlan::Filter { predicate, .. } => write!(f, " {predicate}")?,
            LogicalPlan::Aggregate { keys, aggregates, .. } => {
                f.write_str(" keys [")?;
                for (i, k) in keys.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{k}")?;
                }
                f.write_str("] aggs [")?;
                for (i, a) in aggregates.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{}(", a.func.name())?;
                    match &a.arg {
                        Some(arg) => write!(f, "{arg}")?,
                        None => f.write_str("*")?,
                    }
                    f.write_str(")")?;
                }
                f.write_str("]")?;
            }
            LogicalPlan::Sort { keys, .. } => {
                for (i, k) in keys.iter().enumerate() {
                    write!(f, "{}{}", if i > 0 { ", " } else { " " }, k.expr)?;
                    if k.descending {
                        f.write_str(" DESC")?;
                    }
                }
            }
            LogicalPlan::Project { exprs, output, .. } => {
                for (i, (e, c)) in exprs.iter().zip(output).enumerate() {
                    write!(f, "{}{e} AS {}", if i > 0 { ", " } else { " " }, c.name)?;
                }
            }
            LogicalPlan::Limit { n, .. } => write!(f, " {n}")?,
        }
        writeln!(f)?;
        match self.input() {
            Some(input) => input.fmt_node(f, depth + 1),
            None => Ok(()),
        }
    }
}

impl fmt::Display for LogicalPlan {
    /// Indented operator tree, root first.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_node(f, 0)
    }
}
