use crate::analyzer::TypedExpr;
use crate::error::ExecError;
use crate::exec::{behaviour_bitmaps, EventRows, ExecContext, ExecOptions, Frame, RowMap};
use crate::store::Snapshot;

use super::{BehaviourBitmap, CaseTrace};

/// Behaviour extensions over the events of a set of cases.
#[derive(Clone, Debug)]
pub struct BehaviourFrame {
    pub bitmaps: BehaviourBitmap,
    /// Position range of each requested case, in request order.
    pub traces: Vec<CaseTrace>,
}

/// Evaluates event-level behaviour predicates over the events of `cases`.
/// An event belongs to a behaviour when its predicate is `TRUE`; `NULL`
/// counts as outside.
pub fn evaluate_behaviours(behaviours: &[TypedExpr], snapshot: &Snapshot, cases: &[u32]) -> Result<BehaviourFrame, ExecError> {
    let ctx = ExecContext::new(&ExecOptions::default());
    let parent = Frame::cases(&ctx, snapshot, cases.len(), RowMap::Indices(cases), &[]);
    let rows = EventRows::of_cases(&parent);
    let bitmaps = behaviour_bitmaps(behaviours, &rows.frame(&parent))?;
    Ok(BehaviourFrame { bitmaps, traces: rows.traces })
}
