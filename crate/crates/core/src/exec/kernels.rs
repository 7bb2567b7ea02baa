//! Columnar kernels. Inputs are whole columns or broadcast scalars; NULL
//! propagates through every operator except the three-valued `AND`/`OR` and
//! `IS NULL`.

use std::borrow::Cow;
use std::cmp::Ordering;

use crate::analyzer::{ArithOp, CmpOp, ScalarFunc};
use crate::error::ExecError;
use crate::store::{Column, StringColumn};
use crate::types::{ScalarType, Value};

/// Result of evaluating an expression over a frame.
#[derive(Clone, Debug)]
pub enum Datum<'a> {
    Scalar(Value, ScalarType),
    Column(Cow<'a, Column>),
}

impl<'a> Datum<'a> {
    pub fn ty(&self) -> ScalarType {
        match self {
            Datum::Scalar(_, ty) => *ty,
            Datum::Column(c) => c.ty(),
        }
    }

    /// Materializes the datum as a column of `len` rows.
    pub fn into_column(self, len: usize) -> Cow<'a, Column> {
        match self {
            Datum::Column(c) => c,
            Datum::Scalar(v, ty) => Cow::Owned(broadcast(&v, ty, len)),
        }
    }

    pub fn owned(self, len: usize) -> Column {
        self.into_column(len).into_owned()
    }
}

pub fn broadcast(v: &Value, ty: ScalarType, len: usize) -> Column {
    match (v, ty) {
        (Value::Null, _) => Column::nulls(ty, len),
        (Value::Boolean(b), _) => Column::Boolean(vec![Some(*b); len]),
        (Value::Number(n), _) => Column::Number(vec![Some(*n); len]),
        (Value::Timestamp(t), _) => Column::Timestamp(vec![Some(*t); len]),
        (Value::Duration(d), _) => Column::Duration(vec![Some(*d); len]),
        (Value::String(s), _) => {
            let mut col = StringColumn::from_options([Some(s.as_ref())]);
            let codes = vec![col.codes()[0]; len];
            col = StringColumn::with_codes(col.dictionary_arc().clone(), codes);
            Column::String(col)
        }
    }
}

fn internal(op: &str, msg: impl Into<String>) -> ExecError {
    ExecError::eval(op, msg)
}

/// One operand of an element-wise kernel.
enum Side<'x, T> {
    Col(&'x [Option<T>]),
    Val(Option<T>),
}

impl<T: Copy> Side<'_, T> {
    #[inline]
    fn at(&self, i: usize) -> Option<T> {
        match self {
            Side::Col(v) => v[i],
            Side::Val(v) => *v,
        }
    }
}

fn f64_side<'x>(d: &'x Datum<'_>, op: &str) -> Result<Side<'x, f64>, ExecError> {
    match d {
        Datum::Column(c) => match c.as_ref() {
            Column::Number(v) => Ok(Side::Col(v)),
            other => Err(internal(op, format!("expected Number column, found {}", other.ty()))),
        },
        Datum::Scalar(Value::Number(n), _) => Ok(Side::Val(Some(*n))),
        Datum::Scalar(Value::Null, _) => Ok(Side::Val(None)),
        Datum::Scalar(v, _) => Err(internal(op, format!("expected Number, found {v:?}"))),
    }
}

fn i64_side<'x>(d: &'x Datum<'_>, op: &str) -> Result<Side<'x, i64>, ExecError> {
    match d {
        Datum::Column(c) => match c.as_ref() {
            Column::Timestamp(v) | Column::Duration(v) => Ok(Side::Col(v)),
            other => Err(internal(op, format!("expected temporal column, found {}", other.ty()))),
        },
        Datum::Scalar(Value::Timestamp(t) | Value::Duration(t), _) => Ok(Side::Val(Some(*t))),
        Datum::Scalar(Value::Null, _) => Ok(Side::Val(None)),
        Datum::Scalar(v, _) => Err(internal(op, format!("expected temporal value, found {v:?}"))),
    }
}

fn bool_side<'x>(d: &'x Datum<'_>, op: &str) -> Result<Side<'x, bool>, ExecError> {
    match d {
        Datum::Column(c) => match c.as_ref() {
            Column::Boolean(v) => Ok(Side::Col(v)),
            other => Err(internal(op, format!("expected Boolean column, found {}", other.ty()))),
        },
        Datum::Scalar(Value::Boolean(b), _) => Ok(Side::Val(Some(*b))),
        Datum::Scalar(Value::Null, _) => Ok(Side::Val(None)),
        Datum::Scalar(v, _) => Err(internal(op, format!("expected Boolean, found {v:?}"))),
    }
}

enum StrSide<'x> {
    Col(&'x StringColumn),
    Val(Option<&'x str>),
}

impl StrSide<'_> {
    #[inline]
    fn at(&self, i: usize) -> Option<&str> {
        match self {
            StrSide::Col(c) => c.get(i),
            StrSide::Val(v) => *v,
        }
    }
}

fn str_side<'x>(d: &'x Datum<'_>, op: &str) -> Result<StrSide<'x>, ExecError> {
    match d {
        Datum::Column(c) => match c.as_ref() {
            Column::String(s) => Ok(StrSide::Col(s)),
            other => Err(internal(op, format!("expected String column, found {}", other.ty()))),
        },
        Datum::Scalar(Value::String(s), _) => Ok(StrSide::Val(Some(s))),
        Datum::Scalar(Value::Null, _) => Ok(StrSide::Val(None)),
        Datum::Scalar(v, _) => Err(internal(op, format!("expected String, found {v:?}"))),
    }
}

fn str_cmp(a: &str, b: &str, ignore_case: bool) -> Ordering {
    if ignore_case {
        if a.is_ascii() && b.is_ascii() {
            a.bytes().map(|c| c.to_ascii_lowercase()).cmp(b.bytes().map(|c| c.to_ascii_lowercase()))
        } else {
            a.to_lowercase().cmp(&b.to_lowercase())
        }
    } else {
        a.cmp(b)
    }
}

fn both_scalar(l: &Datum, r: &Datum) -> bool {
    matches!((l, r), (Datum::Scalar(..), Datum::Scalar(..)))
}

/// Evaluates once when both inputs are scalars.
fn scalar_result(col: Column) -> Datum<'static> {
    let ty = col.ty();
    Datum::Scalar(col.get(0), ty)
}

pub fn compare(op: CmpOp, l: &Datum, r: &Datum, ignore_case: bool, len: usize) -> Result<Datum<'static>, ExecError> {
    const OP: &str = "VectorCompare";
    if both_scalar(l, r) {
        return compare(op, l, &Datum::Column(Cow::Owned(r.clone().owned(1))), ignore_case, 1).map(|d| match d {
            Datum::Column(c) => scalar_result(c.into_owned()),
            s => s,
        });
    }
    let out: Vec<Option<bool>> = match l.ty() {
        ScalarType::Number => {
            let (a, b) = (f64_side(l, OP)?, f64_side(r, OP)?);
            (0..len)
                .map(|i| match (a.at(i), b.at(i)) {
                    (Some(x), Some(y)) => x.partial_cmp(&y).map(|o| op.holds(o)),
                    _ => None,
                })
                .collect()
        }
        ScalarType::Timestamp | ScalarType::Duration => {
            let (a, b) = (i64_side(l, OP)?, i64_side(r, OP)?);
            (0..len)
                .map(|i| match (a.at(i), b.at(i)) {
                    (Some(x), Some(y)) => Some(op.holds(x.cmp(&y))),
                    _ => None,
                })
                .collect()
        }
        ScalarType::Boolean => {
            let (a, b) = (bool_side(l, OP)?, bool_side(r, OP)?);
            (0..len)
                .map(|i| match (a.at(i), b.at(i)) {
                    (Some(x), Some(y)) => Some(op.holds(x.cmp(&y))),
                    _ => None,
                })
                .collect()
        }
        ScalarType::String => {
            let (a, b) = (str_side(l, OP)?, str_side(r, OP)?);
            match (&a, &b) {
                (StrSide::Col(c), StrSide::Val(v)) => dict_compare(c, *v, |x, y| op.holds(str_cmp(x, y, ignore_case))),
                (StrSide::Val(v), StrSide::Col(c)) => dict_compare(c, *v, |x, y| op.holds(str_cmp(y, x, ignore_case))),
                _ => (0..len)
                    .map(|i| match (a.at(i), b.at(i)) {
                        (Some(x), Some(y)) => Some(op.holds(str_cmp(x, y, ignore_case))),
                        _ => None,
                    })
                    .collect(),
            }
        }
    };
    Ok(Datum::Column(Cow::Owned(Column::Boolean(out))))
}

/// Compares every dictionary entry once, then maps codes.
fn dict_compare(col: &StringColumn, scalar: Option<&str>, f: impl Fn(&str, &str) -> bool) -> Vec<Option<bool>> {
    let Some(s) = scalar else {
        return vec![None; col.codes().len()];
    };
    let per_code: Vec<bool> = col.dictionary().values().iter().map(|v| f(v, s)).collect();
    col.codes().iter().map(|c| c.map(|c| per_code[c as usize])).collect()
}

pub fn arith(op: ArithOp, l: &Datum, r: &Datum, out: ScalarType, len: usize) -> Result<Datum<'static>, ExecError> {
    const OP: &str = "VectorArith";
    if both_scalar(l, r) {
        let lc = Datum::Column(Cow::Owned(l.clone().owned(1)));
        return arith(op, &lc, r, out, 1).map(|d| match d {
            Datum::Column(c) => scalar_result(c.into_owned()),
            s => s,
        });
    }
    let overflow = || internal(OP, format!("arithmetic overflow in '{}'", op.symbol()));
    let col = if l.ty() == ScalarType::Number {
        let (a, b) = (f64_side(l, OP)?, f64_side(r, OP)?);
        let mut v = Vec::with_capacity(len);
        for i in 0..len {
            let res = match (a.at(i), b.at(i)) {
                (Some(x), Some(y)) => match op {
                    ArithOp::Add => Some(x + y),
                    ArithOp::Sub => Some(x - y),
                    ArithOp::Mul => Some(x * y),
                    ArithOp::Div if y == 0.0 => None,
                    ArithOp::Div => Some(x / y),
                },
                _ => None,
            };
            if res.is_some_and(|x| !x.is_finite()) {
                return Err(overflow());
            }
            v.push(res);
        }
        Column::Number(v)
    } else {
        let (a, b) = (i64_side(l, OP)?, i64_side(r, OP)?);
        let mut v = Vec::with_capacity(len);
        for i in 0..len {
            let res = match (a.at(i), b.at(i)) {
                (Some(x), Some(y)) => Some(
                    match op {
                        ArithOp::Add => x.checked_add(y),
                        ArithOp::Sub => x.checked_sub(y),
                        _ => return Err(internal(OP, "unsupported temporal operator")),
                    }
                    .ok_or_else(overflow)?,
                ),
                _ => None,
            };
            v.push(res);
        }
        match out {
            ScalarType::Timestamp => Column::Timestamp(v),
            _ => Column::Duration(v),
        }
    };
    Ok(Datum::Column(Cow::Owned(col)))
}

pub fn negate(d: Datum, len: usize) -> Result<Datum<'static>, ExecError> {
    const OP: &str = "VectorArith";
    let overflow = || internal(OP, "arithmetic overflow in negation");
    Ok(match d {
        Datum::Scalar(Value::Number(n), ty) => Datum::Scalar(Value::Number(-n), ty),
        Datum::Scalar(Value::Duration(x), ty) => Datum::Scalar(Value::Duration(x.checked_neg().ok_or_else(overflow)?), ty),
        Datum::Scalar(v, ty) => Datum::Scalar(v, ty),
        Datum::Column(c) => Datum::Column(Cow::Owned(match c.as_ref() {
            Column::Number(v) => Column::Number(v.iter().map(|x| x.map(|x| -x)).collect()),
            Column::Duration(v) => Column::Duration(
                v.iter()
                    .map(|x| x.map(|x| x.checked_neg().ok_or_else(overflow)).transpose())
                    .collect::<Result<_, _>>()?,
            ),
            other => return Err(internal(OP, format!("cannot negate {}", other.ty()))),
        })),
    })
    .map(|d| match d {
        Datum::Column(c) if c.len() != len => Datum::Column(c),
        d => d,
    })
}

pub fn not(d: &Datum, len: usize) -> Result<Datum<'static>, ExecError> {
    let a = bool_side(d, "VectorLogic")?;
    if let Datum::Scalar(..) = d {
        return Ok(Datum::Scalar(a.at(0).map_or(Value::Null, |b| Value::Boolean(!b)), ScalarType::Boolean));
    }
    Ok(Datum::Column(Cow::Owned(Column::Boolean((0..len).map(|i| a.at(i).map(|b| !b)).collect()))))
}

/// Three-valued `AND` (`is_and`) or `OR`.
pub fn logic(is_and: bool, l: &Datum, r: &Datum, len: usize) -> Result<Datum<'static>, ExecError> {
    let (a, b) = (bool_side(l, "VectorLogic")?, bool_side(r, "VectorLogic")?);
    let f = |x: Option<bool>, y: Option<bool>| -> Option<bool> {
        if is_and {
            match (x, y) {
                (Some(false), _) | (_, Some(false)) => Some(false),
                (Some(true), Some(true)) => Some(true),
                _ => None,
            }
        } else {
            match (x, y) {
                (Some(true), _) | (_, Some(true)) => Some(true),
                (Some(false), Some(false)) => Some(false),
                _ => None,
            }
        }
    };
    if both_scalar(l, r) {
        return Ok(Datum::Scalar(f(a.at(0), b.at(0)).map_or(Value::Null, Value::Boolean), ScalarType::Boolean));
    }
    Ok(Datum::Column(Cow::Owned(Column::Boolean((0..len).map(|i| f(a.at(i), b.at(i))).collect()))))
}

pub fn is_null(d: &Datum, negated: bool, len: usize) -> Datum<'static> {
    match d {
        Datum::Scalar(v, _) => Datum::Scalar(Value::Boolean(v.is_null() != negated), ScalarType::Boolean),
        Datum::Column(c) => Datum::Column(Cow::Owned(Column::Boolean(
            (0..len).map(|i| Some(c.is_null(i) != negated)).collect(),
        ))),
    }
}

pub fn scalar_function(func: ScalarFunc, args: &[Datum], out: ScalarType, len: usize) -> Result<Datum<'static>, ExecError> {
    const OP: &str = "ScalarFunction";
    let all_scalar = args.iter().all(|a| matches!(a, Datum::Scalar(..)));
    let n = if all_scalar { 1 } else { len };
    let cols: Vec<Column> = args.iter().map(|a| a.clone().owned(n)).collect();
    let col = match func {
        ScalarFunc::Lower | ScalarFunc::Upper => {
            let Column::String(s) = &cols[0] else { return Err(internal(OP, "expected String")) };
            // Transform each dictionary entry once.
            let mapped: Vec<String> = s
                .dictionary()
                .values()
                .iter()
                .map(|v| if func == ScalarFunc::Lower { v.to_lowercase() } else { v.to_uppercase() })
                .collect();
            Column::String(StringColumn::from_options(
                s.codes().iter().map(|c| c.map(|c| mapped[c as usize].as_str())),
            ))
        }
        ScalarFunc::Length => {
            let Column::String(s) = &cols[0] else { return Err(internal(OP, "expected String")) };
            Column::Number((0..n).map(|i| s.get(i).map(|x| x.chars().count() as f64)).collect())
        }
        ScalarFunc::Abs => match &cols[0] {
            Column::Number(v) => Column::Number(v.iter().map(|x| x.map(f64::abs)).collect()),
            Column::Duration(v) => Column::Duration(
                v.iter()
                    .map(|x| x.map(|x| x.checked_abs().ok_or_else(|| internal(OP, "arithmetic overflow in ABS"))).transpose())
                    .collect::<Result<_, _>>()?,
            ),
            other => return Err(internal(OP, format!("ABS of {}", other.ty()))),
        },
        ScalarFunc::Coalesce => Column::from_values(
            out,
            (0..n).map(|i| cols.iter().map(|c| c.get(i)).find(|v| !v.is_null()).unwrap_or(Value::Null)),
        ),
    };
    Ok(if all_scalar { scalar_result(col) } else { Datum::Column(Cow::Owned(col)) })
}
