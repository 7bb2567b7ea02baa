//! Physical planning and vectorized execution of logical plans.
//!
//! Execution pulls the whole input of an operator before producing its
//! output. Case rows are tracked as selections over the snapshot, so filters
//! and sorts only move row indices; values are materialized by
//! `HashAggregate` and `ProjectExec`.

mod aggregate;
mod frame;
mod kernels;
mod optimize;

use std::fmt;

use serde::Serialize;

pub use kernels::Datum;
pub use optimize::optimize;

pub(crate) use frame::{behaviour_bitmaps, EventRows, ExecContext, Frame, RowMap};

use crate::analyzer::LogicalPlan;
use crate::error::ExecError;
use crate::result::ResultTable;
use crate::store::{Column, Snapshot};
use crate::types::Value;

/// Cell budget applied when no other limit is configured.
pub const DEFAULT_MAX_CELLS: usize = 50_000_000;

#[derive(Clone, Debug)]
pub struct ExecOptions {
    /// Upper bound on materialized cells (rows times columns) summed over
    /// all operators of one query.
    pub max_cells: usize,
}

impl Default for ExecOptions {
    fn default() -> Self {
        ExecOptions { max_cells: DEFAULT_MAX_CELLS }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct OperatorStats {
    pub operator: &'static str,
    pub rows: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ExecStats {
    /// Per-case sorts of events by `end_time` done for FIRST/LAST.
    pub end_time_sorts: usize,
    /// Materialized cells charged against the budget.
    pub cells: usize,
    /// Output rows per operator, bottom up.
    pub operators: Vec<OperatorStats>,
}

/// Executable name of a logical operator.
pub fn physical_name(logical: &str) -> &'static str {
    match logical {
        "Scan" => "ColumnScan",
        "Flatten" => "FlattenExec",
        "EventSubqueryEval" => "EventAggregateExec",
        "PatternFilter" => "PatternFilterExec",
        "Filter" => "VectorFilter",
        "Aggregate" => "HashAggregate",
        "Sort" => "SortExec",
        "Project" => "ProjectExec",
        "Limit" => "LimitExec",
        _ => "Unknown",
    }
}

/// A logical plan bound to the snapshot it reads.
#[derive(Debug)]
pub struct PhysicalPlan {
    logical: LogicalPlan,
    snapshot: Snapshot,
}

impl PhysicalPlan {
    pub fn logical(&self) -> &LogicalPlan {
        &self.logical
    }

    pub fn snapshot(&self) -> &Snapshot {
        &self.snapshot
    }

    /// Physical operator names from the root down.
    pub fn operators(&self) -> Vec<&'static str> {
        self.logical.operators().into_iter().map(physical_name).collect()
    }
}

impl fmt::Display for PhysicalPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for line in self.logical.to_string().lines() {
            let body = line.trim_start();
            let pad = &line[..line.len() - body.len()];
            let (name, rest) = body.split_once(' ').unwrap_or((body, ""));
            let sep = if rest.is_empty() { "" } else { " " };
            writeln!(f, "{pad}{}{sep}{rest}", physical_name(name))?;
        }
        Ok(())
    }
}

/// Binds a plan to a snapshot, checking that every referenced column was
/// captured.
pub fn build_physical(logical: LogicalPlan, snapshot: Snapshot) -> Result<PhysicalPlan, ExecError> {
    for (level, idx) in logical.scan_columns().iter().chain(&logical.referenced_columns()) {
        snapshot.column(*level, *idx)?;
    }
    Ok(PhysicalPlan { logical, snapshot })
}

pub fn execute(plan: &PhysicalPlan, options: &ExecOptions) -> Result<(ResultTable, ExecStats), ExecError> {
    let ctx = ExecContext::new(options);
    let mut stats = ExecStats::default();
    let state = run(&plan.logical, &ctx, &plan.snapshot, &mut stats)?;
    let State::Table { columns, len } = state else {
        return Err(ExecError::eval("ProjectExec", "plan does not end in a projection"));
    };
    let rows = (0..len).map(|r| columns.iter().map(|c| c.get(r)).collect::<Vec<Value>>()).collect();
    stats.end_time_sorts = ctx.sorts();
    stats.cells = ctx.cells();
    Ok((ResultTable { columns: plan.logical.output().to_vec(), rows }, stats))
}

/// Row indices into the snapshot, or all of them.
#[derive(Clone, Debug)]
enum Sel {
    All(usize),
    Rows(Vec<u32>),
}

impl Sel {
    fn len(&self) -> usize {
        match self {
            Sel::All(n) => *n,
            Sel::Rows(r) => r.len(),
        }
    }

    fn map(&self) -> RowMap<'_> {
        match self {
            Sel::All(_) => RowMap::Identity,
            Sel::Rows(r) => RowMap::Indices(r),
        }
    }

    fn gather(&self, rows: &[u32]) -> Sel {
        let map = self.map();
        Sel::Rows(rows.iter().map(|&r| map.at(r as usize) as u32).collect())
    }
}

#[derive(Debug)]
enum State {
    /// One row per selected case, plus subquery slots aligned with the rows.
    Cases { sel: Sel, slots: Vec<Column> },
    /// One row per selected event; `case_of` is aligned with the rows.
    Events { sel: Sel, case_of: Vec<u32> },
    Table { columns: Vec<Column>, len: usize },
}

impl State {
    fn len(&self) -> usize {
        match self {
            State::Cases { sel, .. } | State::Events { sel, .. } => sel.len(),
            State::Table { len, .. } => *len,
        }
    }

    fn frame<'a>(&'a self, ctx: &'a ExecContext, snap: &'a Snapshot) -> Frame<'a> {
        match self {
            State::Cases { sel, slots } => Frame::cases(ctx, snap, sel.len(), sel.map(), slots),
            State::Events { sel, case_of } => Frame {
                ctx,
                snap,
                len: sel.len(),
                cases: RowMap::Indices(case_of),
                events: Some(sel.map()),
                slots: &[],
                slot_rows: RowMap::Identity,
                inputs: &[],
            },
            State::Table { columns, len } => Frame {
                ctx,
                snap,
                len: *len,
                cases: RowMap::Identity,
                events: None,
                slots: &[],
                slot_rows: RowMap::Identity,
                inputs: columns,
            },
        }
    }

    /// Keeps the given rows, in the given order.
    fn gather(self, rows: &[u32]) -> State {
        match self {
            State::Cases { sel, slots } => State::Cases {
                sel: sel.gather(rows),
                slots: slots.iter().map(|s| s.gather(rows)).collect(),
            },
            State::Events { sel, case_of } => State::Events {
                sel: sel.gather(rows),
                case_of: rows.iter().map(|&r| case_of[r as usize]).collect(),
            },
            State::Table { columns, .. } => State::Table {
                columns: columns.iter().map(|c| c.gather(rows)).collect(),
                len: rows.len(),
            },
        }
    }

    fn retain(self, mask: &[bool]) -> State {
        if mask.iter().all(|&b| b) {
            return self;
        }
        let rows: Vec<u32> = mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i as u32).collect();
        self.gather(&rows)
    }
}

fn run(node: &LogicalPlan, ctx: &ExecContext, snap: &Snapshot, stats: &mut ExecStats) -> Result<State, ExecError> {
    let input = match node.input() {
        Some(input) => Some(run(input, ctx, snap, stats)?),
        None => None,
    };
    let name = physical_name(node.name());
    let out = match (node, input) {
        (LogicalPlan::Scan { .. }, _) => State::Cases { sel: Sel::All(snap.case_count()), slots: Vec::new() },
        (LogicalPlan::Flatten { .. }, Some(State::Cases { sel, .. })) => match sel {
            Sel::All(_) => State::Events { sel: Sel::All(snap.event_count()), case_of: snap.event_case_index() },
            Sel::Rows(cases) => {
                let mut events = Vec::new();
                let mut case_of = Vec::new();
                for &c in &cases {
                    for e in snap.event_range(c as usize) {
                        events.push(e as u32);
                        case_of.push(c);
                    }
                }
                State::Events { sel: Sel::Rows(events), case_of }
            }
        },
        (LogicalPlan::EventSubqueryEval { aggregates, .. }, Some(state @ State::Cases { .. })) => {
            let computed = aggregate::event_aggregates(aggregates, &state.frame(ctx, snap))?;
            let State::Cases { sel, mut slots } = state else { unreachable!() };
            slots.extend(computed);
            State::Cases { sel, slots }
        }
        (LogicalPlan::PatternFilter { spec, .. }, Some(state)) => {
            let mask = frame::matches(spec, &state.frame(ctx, snap))?;
            state.retain(&mask)
        }
        (LogicalPlan::Filter { predicate, .. }, Some(state)) => {
            let mask = frame::eval_mask(predicate, &state.frame(ctx, snap))?;
            state.retain(&mask)
        }
        (LogicalPlan::Aggregate { keys, aggregates, .. }, Some(state)) => {
            let columns = aggregate::group(keys, aggregates, &state.frame(ctx, snap))?;
            let len = columns.first().map_or(0, Column::len);
            State::Table { columns, len }
        }
        (LogicalPlan::Sort { keys, .. }, Some(state)) => {
            let f = state.frame(ctx, snap);
            let cols = keys.iter().map(|k| frame::eval(&k.expr, &f).map(|d| d.owned(f.len))).collect::<Result<Vec<_>, _>>()?;
            let mut perm: Vec<u32> = (0..f.len as u32).collect();
            perm.sort_by(|&a, &b| {
                for (k, c) in keys.iter().zip(&cols) {
                    let o = c.get(a as usize).sort_cmp(&c.get(b as usize));
                    let o = if k.descending { o.reverse() } else { o };
                    if o.is_ne() {
                        return o;
                    }
                }
                std::cmp::Ordering::Equal
            });
            state.gather(&perm)
        }
        (LogicalPlan::Project { exprs, .. }, Some(state)) => {
            let f = state.frame(ctx, snap);
            ctx.charge(f.len.saturating_mul(exprs.len()))?;
            let columns = exprs.iter().map(|e| frame::eval(e, &f).map(|d| d.owned(f.len))).collect::<Result<Vec<_>, _>>()?;
            State::Table { columns, len: f.len }
        }
        (LogicalPlan::Limit { n, .. }, Some(state)) => {
            let keep = state.len().min(usize::try_from(*n).unwrap_or(usize::MAX));
            if keep == state.len() {
                state
            } else {
                state.gather(&(0..keep as u32).collect::<Vec<_>>())
            }
        }
        (node, _) => return Err(ExecError::eval(name, format!("invalid input for {}", node.name()))),
    };
    stats.operators.push(OperatorStats { operator: name, rows: out.len() });
    Ok(out)
}
