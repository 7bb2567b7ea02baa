//! Expression evaluation over a frame of rows.
//!
//! A frame is a run of rows, each naming one case and, in event frames, one
//! event of the snapshot. Columns are gathered through the row maps, so the
//! same expression tree evaluates over cases, flattened events or the events
//! of selected cases.

use std::borrow::Cow;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

use super::kernels::{self, Datum};
use super::ExecOptions;
use crate::analyzer::{CmpOp, MatchSpec, TExpr, TypedExpr};
use crate::error::ExecError;
use crate::pattern::{match_case, BehaviourBitmap, Bitmap, CaseTrace};
use crate::store::{Column, Snapshot};
use crate::types::{Level, ScalarType};

/// Shared state of one query execution.
#[derive(Debug)]
pub(crate) struct ExecContext {
    max_cells: usize,
    cells: AtomicUsize,
    sorts: AtomicUsize,
}

impl ExecContext {
    pub fn new(options: &ExecOptions) -> ExecContext {
        ExecContext { max_cells: options.max_cells, cells: AtomicUsize::new(0), sorts: AtomicUsize::new(0) }
    }

    /// Accounts for `n` materialized cells.
    pub fn charge(&self, n: usize) -> Result<(), ExecError> {
        let total = self.cells.fetch_add(n, Ordering::Relaxed).saturating_add(n);
        if total > self.max_cells {
            return Err(ExecError::ResourceLimitExceeded { limit: self.max_cells });
        }
        Ok(())
    }

    pub fn cells(&self) -> usize {
        self.cells.load(Ordering::Relaxed)
    }

    pub fn count_sort(&self) {
        self.sorts.fetch_add(1, Ordering::Relaxed);
    }

    pub fn sorts(&self) -> usize {
        self.sorts.load(Ordering::Relaxed)
    }
}

/// Maps frame rows to storage rows.
#[derive(Clone, Copy, Debug)]
pub(crate) enum RowMap<'a> {
    Identity,
    Indices(&'a [u32]),
}

impl<'a> RowMap<'a> {
    #[inline]
    pub fn at(&self, row: usize) -> usize {
        match self {
            RowMap::Identity => row,
            RowMap::Indices(ix) => ix[row] as usize,
        }
    }

    pub fn gather<'c>(&self, col: &'c Column) -> Cow<'c, Column> {
        match self {
            RowMap::Identity => Cow::Borrowed(col),
            RowMap::Indices(ix) => Cow::Owned(col.gather(ix)),
        }
    }
}

#[derive(Clone, Copy)]
pub(crate) struct Frame<'a> {
    pub ctx: &'a ExecContext,
    pub snap: &'a Snapshot,
    pub len: usize,
    pub cases: RowMap<'a>,
    /// `None` in case frames.
    pub events: Option<RowMap<'a>>,
    pub slots: &'a [Column],
    pub slot_rows: RowMap<'a>,
    pub inputs: &'a [Column],
}

impl<'a> Frame<'a> {
    pub fn cases(ctx: &'a ExecContext, snap: &'a Snapshot, len: usize, cases: RowMap<'a>, slots: &'a [Column]) -> Self {
        Frame { ctx, snap, len, cases, events: None, slots, slot_rows: RowMap::Identity, inputs: &[] }
    }
}

/// The events of every case row of a case frame, back to back.
pub(crate) struct EventRows {
    events: Option<Vec<u32>>,
    case_of: Vec<u32>,
    slot_of: Vec<u32>,
    pub traces: Vec<CaseTrace>,
}

impl EventRows {
    pub fn of_cases(f: &Frame) -> EventRows {
        let offsets = f.snap.offsets();
        let with_slots = !f.slots.is_empty();
        let all = matches!(f.cases, RowMap::Identity) && f.len == f.snap.case_count();
        if all {
            let case_of = f.snap.event_case_index();
            let traces = (0..f.len).map(|c| CaseTrace::new(offsets[c], offsets[c + 1] - offsets[c])).collect();
            let slot_of = if with_slots {
                case_of.iter().map(|&c| f.slot_rows.at(c as usize) as u32).collect()
            } else {
                Vec::new()
            };
            return EventRows { events: None, case_of, slot_of, traces };
        }
        let mut events = Vec::new();
        let mut case_of = Vec::new();
        let mut slot_of = Vec::new();
        let mut traces = Vec::with_capacity(f.len);
        for row in 0..f.len {
            let case = f.cases.at(row);
            let range = f.snap.event_range(case);
            traces.push(CaseTrace::new(events.len(), range.len()));
            case_of.extend(std::iter::repeat_n(case as u32, range.len()));
            if with_slots {
                slot_of.extend(std::iter::repeat_n(f.slot_rows.at(row) as u32, range.len()));
            }
            events.extend(range.map(|e| e as u32));
        }
        EventRows { events: Some(events), case_of, slot_of, traces }
    }

    pub fn len(&self) -> usize {
        self.case_of.len()
    }

    /// Storage index of event row `row`.
    pub fn event(&self, row: usize) -> usize {
        match &self.events {
            Some(ev) => ev[row] as usize,
            None => row,
        }
    }

    pub fn frame<'b>(&'b self, parent: &Frame<'b>) -> Frame<'b> {
        Frame {
            ctx: parent.ctx,
            snap: parent.snap,
            len: self.len(),
            cases: RowMap::Indices(&self.case_of),
            events: Some(match &self.events {
                Some(ev) => RowMap::Indices(ev),
                None => RowMap::Identity,
            }),
            slots: parent.slots,
            slot_rows: RowMap::Indices(&self.slot_of),
            inputs: &[],
        }
    }
}

fn internal(msg: impl Into<String>) -> ExecError {
    ExecError::eval("Evaluate", msg)
}

/// Evaluates an expression for every row of the frame.
pub(crate) fn eval<'a>(e: &TypedExpr, f: &Frame<'a>) -> Result<Datum<'a>, ExecError> {
    let n = f.len;
    Ok(match &e.kind {
        TExpr::Column(r) => {
            let col = f.snap.column(r.level, r.index)?;
            let map = match r.level {
                Level::Case => f.cases,
                Level::Event => f.events.ok_or_else(|| internal(format!("event column '{}' outside an event scope", r.name)))?,
            };
            Datum::Column(map.gather(col))
        }
        TExpr::Literal(v) => Datum::Scalar(v.clone(), e.ty),
        TExpr::Negate(x) => kernels::negate(eval(x, f)?, n)?,
        TExpr::Not(x) => kernels::not(&eval(x, f)?, n)?,
        TExpr::Arith { op, left, right } => kernels::arith(*op, &eval(left, f)?, &eval(right, f)?, e.ty, n)?,
        TExpr::Compare { op, left, right, ignore_case } => {
            kernels::compare(*op, &eval(left, f)?, &eval(right, f)?, *ignore_case, n)?
        }
        TExpr::And(a, b) => kernels::logic(true, &eval(a, f)?, &eval(b, f)?, n)?,
        TExpr::Or(a, b) => kernels::logic(false, &eval(a, f)?, &eval(b, f)?, n)?,
        TExpr::InList { expr, list, negated } => {
            let x = eval(expr, f)?;
            let mut acc = Datum::Scalar(crate::types::Value::Boolean(false), ScalarType::Boolean);
            for item in list {
                let eq = kernels::compare(CmpOp::Eq, &x, &eval(item, f)?, false, n)?;
                acc = kernels::logic(false, &acc, &eq, n)?;
            }
            if *negated {
                kernels::not(&acc, n)?
            } else {
                acc
            }
        }
        TExpr::IsNull { expr, negated } => kernels::is_null(&eval(expr, f)?, *negated, n),
        TExpr::Scalar { func, args } => {
            let args = args.iter().map(|a| eval(a, f)).collect::<Result<Vec<_>, _>>()?;
            kernels::scalar_function(*func, &args, e.ty, n)?
        }
        TExpr::Exists(pred) => Datum::Column(Cow::Owned(exists(pred, f)?)),
        TExpr::EventAgg(slot) => {
            let col = f.slots.get(*slot).ok_or_else(|| internal(format!("subquery slot ${slot} is not computed")))?;
            Datum::Column(f.slot_rows.gather(col))
        }
        TExpr::Matches(spec) => Datum::Column(Cow::Owned(Column::Boolean(
            matches(spec, f)?.into_iter().map(Some).collect(),
        ))),
        TExpr::Input(i) => {
            let col = f.inputs.get(*i).ok_or_else(|| internal(format!("input column #{i} is missing")))?;
            Datum::Column(Cow::Borrowed(col))
        }
    })
}

/// Evaluates a Boolean expression; only `TRUE` rows count as set.
pub(crate) fn eval_mask(e: &TypedExpr, f: &Frame) -> Result<Vec<bool>, ExecError> {
    match eval(e, f)? {
        Datum::Scalar(v, _) => Ok(vec![v == crate::types::Value::Boolean(true); f.len]),
        Datum::Column(c) => match c.as_ref() {
            Column::Boolean(v) => Ok(v.iter().map(|b| *b == Some(true)).collect()),
            other => Err(internal(format!("predicate has type {}", other.ty()))),
        },
    }
}

fn require_case_frame(f: &Frame) -> Result<(), ExecError> {
    if f.events.is_some() {
        return Err(internal("per-case predicate evaluated in an event scope"));
    }
    Ok(())
}

fn exists(pred: &TypedExpr, f: &Frame) -> Result<Column, ExecError> {
    require_case_frame(f)?;
    let rows = EventRows::of_cases(f);
    let mask = eval_mask(pred, &rows.frame(f))?;
    Ok(Column::Boolean(
        rows.traces.iter().map(|t| Some(mask[t.start..t.start + t.len].iter().any(|&b| b))).collect(),
    ))
}

pub(crate) fn behaviour_bitmaps(behaviours: &[TypedExpr], f: &Frame) -> Result<BehaviourBitmap, ExecError> {
    let maps = behaviours
        .iter()
        .map(|b| eval_mask(b, f).map(Bitmap::from_bools))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BehaviourBitmap::new(maps))
}

/// Pattern test for every case row of the frame.
pub(crate) fn matches(spec: &MatchSpec, f: &Frame) -> Result<Vec<bool>, ExecError> {
    require_case_frame(f)?;
    let rows = EventRows::of_cases(f);
    let bitmaps = behaviour_bitmaps(&spec.behaviours, &rows.frame(f))?;
    Ok(rows.traces.par_iter().map(|t| match_case(&spec.pattern, *t, &bitmaps)).collect())
}
