//! Rule-based rewrites of the logical plan.
//!
//! Every rule keeps the result unchanged: filters move below operators that
//! only append columns, limits move below per-row operators, FIRST/LAST use
//! the stored event order, and the scan keeps only referenced columns.

use crate::analyzer::{AggFunc, AggStrategy, LogicalPlan, TypedExpr};
use crate::store::Schema;
use crate::types::Level;

pub fn optimize(plan: LogicalPlan, schema: &Schema) -> LogicalPlan {
    let mut plan = rewrite(plan);
    mark_positional(&mut plan);
    prune_scan(&mut plan, schema);
    plan
}

fn boxed(p: LogicalPlan) -> Box<LogicalPlan> {
    Box::new(p)
}

fn rewrite(plan: LogicalPlan) -> LogicalPlan {
    match plan {
        LogicalPlan::Filter { input, predicate } => push_filter(rewrite(*input), predicate),
        LogicalPlan::PatternFilter { input, spec } => push_pattern(rewrite(*input), spec),
        LogicalPlan::Limit { input, n } => push_limit(rewrite(*input), n),
        mut other => {
            if let Some(input) = other.input_mut() {
                let inner = std::mem::replace(&mut **input, LogicalPlan::Scan { log_id: String::new(), columns: vec![] });
                **input = rewrite(inner);
            }
            other
        }
    }
}

fn push_filter(input: LogicalPlan, predicate: TypedExpr) -> LogicalPlan {
    match input {
        LogicalPlan::PatternFilter { input, spec } => {
            LogicalPlan::PatternFilter { input: boxed(push_filter(*input, predicate)), spec }
        }
        LogicalPlan::EventSubqueryEval { input, aggregates } => {
            let (bound, free): (Vec<_>, Vec<_>) = predicate.conjuncts().into_iter().partition(TypedExpr::uses_slots);
            let inner = match TypedExpr::and_all(free) {
                Some(p) => push_filter(*input, p),
                None => *input,
            };
            let node = LogicalPlan::EventSubqueryEval { input: boxed(inner), aggregates };
            match TypedExpr::and_all(bound) {
                Some(p) => LogicalPlan::Filter { input: boxed(node), predicate: p },
                None => node,
            }
        }
        LogicalPlan::Filter { input, predicate: first } => {
            let both = TypedExpr::and_all(vec![first, predicate]).expect("two conjuncts");
            LogicalPlan::Filter { input, predicate: both }
        }
        other => LogicalPlan::Filter { input: boxed(other), predicate },
    }
}

fn push_pattern(input: LogicalPlan, spec: std::sync::Arc<crate::analyzer::MatchSpec>) -> LogicalPlan {
    match input {
        LogicalPlan::EventSubqueryEval { input, aggregates } if !spec.behaviours.iter().any(TypedExpr::uses_slots) => {
            LogicalPlan::EventSubqueryEval { input: boxed(push_pattern(*input, spec)), aggregates }
        }
        other => LogicalPlan::PatternFilter { input: boxed(other), spec },
    }
}

fn push_limit(input: LogicalPlan, n: u64) -> LogicalPlan {
    match input {
        LogicalPlan::Project { input, exprs, output } => {
            LogicalPlan::Project { input: boxed(push_limit(*input, n)), exprs, output }
        }
        LogicalPlan::EventSubqueryEval { input, aggregates } => {
            LogicalPlan::EventSubqueryEval { input: boxed(push_limit(*input, n)), aggregates }
        }
        LogicalPlan::Limit { input, n: m } => LogicalPlan::Limit { input, n: n.min(m) },
        other => LogicalPlan::Limit { input: boxed(other), n },
    }
}

fn mark_positional(plan: &mut LogicalPlan) {
    if let LogicalPlan::EventSubqueryEval { aggregates, .. } = plan {
        for a in aggregates.iter_mut() {
            if matches!(a.func, AggFunc::First | AggFunc::Last) {
                a.strategy = AggStrategy::Positional;
            }
        }
    }
    if let Some(input) = plan.input_mut() {
        mark_positional(input);
    }
}

fn prune_scan(plan: &mut LogicalPlan, schema: &Schema) {
    let mut needed = plan.referenced_columns();
    if needs_end_time(plan) {
        needed.push((Level::Event, schema.end_time_index()));
        needed.sort();
        needed.dedup();
    }
    let mut node = plan;
    loop {
        match node {
            LogicalPlan::Scan { columns, .. } => {
                *columns = needed;
                return;
            }
            other => match other.input_mut() {
                Some(input) => node = input,
                None => return,
            },
        }
    }
}

/// Whether some FIRST/LAST still orders events at run time.
fn needs_end_time(plan: &LogicalPlan) -> bool {
    let mut node = Some(plan);
    while let Some(n) = node {
        if let LogicalPlan::EventSubqueryEval { aggregates, .. } = n {
            if aggregates
                .iter()
                .any(|a| matches!(a.func, AggFunc::First | AggFunc::Last) && a.strategy == AggStrategy::Scan)
            {
                return true;
            }
        }
        node = n.input();
    }
    false
}
