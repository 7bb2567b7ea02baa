//! Aggregate accumulators, per-case subquery aggregation and grouping.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;

use super::frame::{eval, EventRows, Frame, RowMap};
use crate::analyzer::{AggFunc, AggStrategy, AggregateCall, EventAggregate};
use crate::error::ExecError;
use crate::store::Column;
use crate::types::{GroupKey, ScalarType, Value};

/// Running state of one aggregate over one group.
#[derive(Clone, Debug)]
pub(crate) struct Accumulator {
    func: AggFunc,
    ty: ScalarType,
    seen: Option<HashSet<GroupKey>>,
    count: u64,
    sum_f: f64,
    sum_i: i128,
    best: Value,
    first: Option<Value>,
    last: Option<Value>,
}

impl Accumulator {
    pub fn new(func: AggFunc, distinct: bool, ty: ScalarType) -> Accumulator {
        Accumulator {
            func,
            ty,
            seen: distinct.then(HashSet::new),
            count: 0,
            sum_f: 0.0,
            sum_i: 0,
            best: Value::Null,
            first: None,
            last: None,
        }
    }

    /// Feeds one row. `COUNT(*)` passes `Value::Null` and counts every row.
    pub fn update(&mut self, v: Value) {
        match self.func {
            AggFunc::CountStar => {
                self.count += 1;
                return;
            }
            AggFunc::First => {
                if self.first.is_none() {
                    self.first = Some(v);
                }
                return;
            }
            AggFunc::Last => {
                self.last = Some(v);
                return;
            }
            _ => {}
        }
        if v.is_null() {
            return;
        }
        if let Some(seen) = &mut self.seen {
            if !seen.insert(GroupKey(v.clone())) {
                return;
            }
        }
        self.count += 1;
        match (&self.func, &v) {
            (AggFunc::Sum | AggFunc::Avg, Value::Number(x)) => self.sum_f += x,
            (AggFunc::Sum | AggFunc::Avg, Value::Duration(x)) => self.sum_i += *x as i128,
            (AggFunc::Min, _) if self.best.is_null() || v.sort_cmp(&self.best).is_lt() => self.best = v,
            (AggFunc::Max, _) if self.best.is_null() || v.sort_cmp(&self.best).is_gt() => self.best = v,
            _ => {}
        }
    }

    pub fn finish(self) -> Result<Value, ExecError> {
        let overflow = || ExecError::eval("Aggregate", format!("{} overflows", self.func.name()));
        Ok(match self.func {
            AggFunc::Count | AggFunc::CountStar => Value::Number(self.count as f64),
            AggFunc::First => self.first.unwrap_or(Value::Null),
            AggFunc::Last => self.last.unwrap_or(Value::Null),
            AggFunc::Min | AggFunc::Max => self.best,
            _ if self.count == 0 => Value::Null,
            AggFunc::Sum => match self.ty {
                ScalarType::Duration => Value::Duration(i64::try_from(self.sum_i).map_err(|_| overflow())?),
                _ if !self.sum_f.is_finite() => return Err(overflow()),
                _ => Value::Number(self.sum_f),
            },
            AggFunc::Avg => match self.ty {
                ScalarType::Duration => {
                    let n = self.count as i128;
                    // Round half away from zero.
                    let q = (2 * self.sum_i + n * self.sum_i.signum()) / (2 * n);
                    Value::Duration(i64::try_from(q).map_err(|_| overflow())?)
                }
                _ if !self.sum_f.is_finite() => return Err(overflow()),
                _ => Value::Number(self.sum_f / self.count as f64),
            },
        })
    }
}

/// Computes every event-level aggregate for each case row of the frame.
/// Returns one column per aggregate, aligned with the frame rows.
pub(crate) fn event_aggregates(aggs: &[EventAggregate], f: &Frame) -> Result<Vec<Column>, ExecError> {
    let rows = EventRows::of_cases(f);
    let ev = rows.frame(f);
    let mut out = Vec::with_capacity(aggs.len());
    for agg in aggs {
        let col = match (agg.func, agg.strategy) {
            (AggFunc::First | AggFunc::Last, AggStrategy::Positional) => positional(agg, &rows, &ev)?,
            _ => scan(agg, &rows, &ev)?,
        };
        f.ctx.charge(col.len())?;
        out.push(col);
    }
    Ok(out)
}

fn filter_mask(agg: &EventAggregate, ev: &Frame) -> Result<Option<Vec<bool>>, ExecError> {
    agg.filter.as_ref().map(|p| super::frame::eval_mask(p, ev)).transpose()
}

/// FIRST/LAST reading the boundary event of each case. Events are stored in
/// end-time order, so no sort is needed.
fn positional(agg: &EventAggregate, rows: &EventRows, ev: &Frame) -> Result<Column, ExecError> {
    let mask = filter_mask(agg, ev)?;
    let last = agg.func == AggFunc::Last;
    let picked: Vec<Option<usize>> = rows
        .traces
        .iter()
        .map(|t| {
            let mut range = t.start..t.start + t.len;
            let ok = |&p: &usize| mask.as_ref().is_none_or(|m| m[p]);
            if last {
                range.rev().find(ok)
            } else {
                range.find(ok)
            }
        })
        .collect();
    let arg = agg.arg.as_ref().ok_or_else(|| ExecError::eval("EventAggregateExec", "FIRST/LAST without argument"))?;
    // Evaluate the argument only on the picked events.
    let hits: Vec<u32> = picked.iter().flatten().map(|&p| p as u32).collect();
    let case_of: Vec<u32> = hits.iter().map(|&p| ev.cases.at(p as usize) as u32).collect();
    let events: Vec<u32> = hits.iter().map(|&p| ev.events.unwrap_or(RowMap::Identity).at(p as usize) as u32).collect();
    let slot_of: Vec<u32> = if ev.slots.is_empty() {
        Vec::new()
    } else {
        hits.iter().map(|&p| ev.slot_rows.at(p as usize) as u32).collect()
    };
    let sub = Frame {
        len: hits.len(),
        cases: RowMap::Indices(&case_of),
        events: Some(RowMap::Indices(&events)),
        slot_rows: RowMap::Indices(&slot_of),
        ..*ev
    };
    let values = eval(arg, &sub)?.owned(hits.len());
    let mut k = 0;
    Ok(Column::from_values(
        agg.ty,
        picked.iter().map(|p| match p {
            Some(_) => {
                k += 1;
                values.get(k - 1)
            }
            None => Value::Null,
        }),
    ))
}

/// Generic per-case aggregation. FIRST/LAST order each case's events by
/// `end_time` first.
fn scan(agg: &EventAggregate, rows: &EventRows, ev: &Frame) -> Result<Column, ExecError> {
    let mask = filter_mask(agg, ev)?;
    let values = agg.arg.as_ref().map(|a| eval(a, ev).map(|d| d.owned(ev.len))).transpose()?;
    let ordered = matches!(agg.func, AggFunc::First | AggFunc::Last);
    let end_time = if ordered {
        let idx = ev.snap.schema().end_time_index();
        Some(ev.snap.event_column(idx)?)
    } else {
        None
    };
    let results: Vec<Result<Value, ExecError>> = rows
        .traces
        .par_iter()
        .map(|t| {
            let mut positions: Vec<usize> = (t.start..t.start + t.len).collect();
            if let Some(Column::Timestamp(ends)) = end_time {
                positions.sort_by_key(|&p| ends[rows.event(p)]);
                ev.ctx.count_sort();
            }
            let mut acc = Accumulator::new(agg.func, agg.distinct, agg.ty);
            for p in positions {
                if mask.as_ref().is_some_and(|m| !m[p]) {
                    continue;
                }
                acc.update(values.as_ref().map_or(Value::Null, |v| v.get(p)));
            }
            acc.finish()
        })
        .collect();
    let values = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(Column::from_values(agg.ty, values))
}

/// Hash aggregation in first-appearance order of the group keys. Without
/// keys there is exactly one group, even over zero rows.
pub(crate) fn group(keys: &[crate::analyzer::TypedExpr], calls: &[AggregateCall], f: &Frame) -> Result<Vec<Column>, ExecError> {
    let key_cols = keys.iter().map(|k| eval(k, f).map(|d| d.owned(f.len))).collect::<Result<Vec<_>, _>>()?;
    let arg_cols = calls
        .iter()
        .map(|c| c.arg.as_ref().map(|a| eval(a, f).map(|d| d.owned(f.len))).transpose())
        .collect::<Result<Vec<_>, _>>()?;
    let fresh = || calls.iter().map(|c| Accumulator::new(c.func, c.distinct, c.ty)).collect::<Vec<_>>();
    let mut index: HashMap<Vec<GroupKey>, usize> = HashMap::new();
    let mut groups: Vec<(Vec<Value>, Vec<Accumulator>)> = Vec::new();
    if keys.is_empty() {
        groups.push((Vec::new(), fresh()));
    }
    for row in 0..f.len {
        let g = if keys.is_empty() {
            0
        } else {
            let key: Vec<Value> = key_cols.iter().map(|c| c.get(row)).collect();
            let hk: Vec<GroupKey> = key.iter().cloned().map(GroupKey).collect();
            *index.entry(hk).or_insert_with(|| {
                groups.push((key, fresh()));
                groups.len() - 1
            })
        };
        for (acc, arg) in groups[g].1.iter_mut().zip(&arg_cols) {
            acc.update(arg.as_ref().map_or(Value::Null, |c| c.get(row)));
        }
    }
    f.ctx.charge(groups.len() * (keys.len() + calls.len()))?;
    let mut out: Vec<Column> = keys.iter().map(|k| Column::new(k.ty)).collect();
    out.extend(calls.iter().map(|c| Column::new(c.ty)));
    for (key, accs) in groups {
        for (i, v) in key.into_iter().enumerate() {
            push(&mut out[i], v)?;
        }
        for (j, acc) in accs.into_iter().enumerate() {
            push(&mut out[keys.len() + j], acc.finish()?)?;
        }
    }
    Ok(out)
}

fn push(col: &mut Column, v: Value) -> Result<(), ExecError> {
    col.push(v).map_err(|v| ExecError::eval("HashAggregate", format!("value {v:?} does not fit column type {}", col.ty())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(func: AggFunc, distinct: bool, ty: ScalarType, values: &[Value]) -> Value {
        let mut acc = Accumulator::new(func, distinct, ty);
        for v in values {
            acc.update(v.clone());
        }
        acc.finish().unwrap()
    }

    #[test]
    fn empty_groups() {
        assert_eq!(run(AggFunc::Count, false, ScalarType::Number, &[]), Value::Number(0.0));
        assert_eq!(run(AggFunc::Sum, false, ScalarType::Number, &[]), Value::Null);
        assert_eq!(run(AggFunc::Max, false, ScalarType::Number, &[Value::Null]), Value::Null);
    }

    #[test]
    fn distinct_counts_unique_values() {
        let v = [Value::Number(1.0), Value::Number(1.0), Value::Null, Value::Number(2.0)];
        assert_eq!(run(AggFunc::Count, true, ScalarType::Number, &v), Value::Number(2.0));
        assert_eq!(run(AggFunc::Count, false, ScalarType::Number, &v), Value::Number(3.0));
        assert_eq!(run(AggFunc::CountStar, false, ScalarType::Number, &v), Value::Number(4.0));
        assert_eq!(run(AggFunc::Sum, true, ScalarType::Number, &v), Value::Number(3.0));
    }

    #[test]
    fn duration_average_rounds_half_away_from_zero() {
        let d = |x| Value::Duration(x);
        assert_eq!(run(AggFunc::Avg, false, ScalarType::Duration, &[d(1), d(2)]), d(2));
        assert_eq!(run(AggFunc::Avg, false, ScalarType::Duration, &[d(-1), d(-2)]), d(-2));
        assert_eq!(run(AggFunc::Avg, false, ScalarType::Duration, &[d(1), d(1), d(2)]), d(1));
    }

    #[test]
    fn first_and_last_keep_nulls() {
        let v = [Value::Null, Value::Number(1.0)];
        assert_eq!(run(AggFunc::First, false, ScalarType::Number, &v), Value::Null);
        assert_eq!(run(AggFunc::Last, false, ScalarType::Number, &v), Value::Number(1.0));
    }
}
