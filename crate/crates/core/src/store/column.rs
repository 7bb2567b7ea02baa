//! Typed column storage. Strings are dictionary encoded.

use std::collections::HashMap;
use std::sync::Arc;

use crate::types::{ScalarType, Value};

/// Distinct strings of a column plus a reverse index.
#[derive(Clone, Debug, Default)]
pub struct Dictionary {
    values: Vec<Arc<str>>,
    index: HashMap<Arc<str>, u32>,
}

impl Dictionary {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, code: u32) -> &Arc<str> {
        &self.values[code as usize]
    }

    pub fn lookup(&self, s: &str) -> Option<u32> {
        self.index.get(s).copied()
    }

    pub fn values(&self) -> &[Arc<str>] {
        &self.values
    }

    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&code) = self.index.get(s) {
            return code;
        }
        let code = self.values.len() as u32;
        let s: Arc<str> = Arc::from(s);
        self.values.push(s.clone());
        self.index.insert(s, code);
        code
    }
}

#[derive(Clone, Debug, Default)]
pub struct StringColumn {
    dict: Arc<Dictionary>,
    codes: Vec<Option<u32>>,
}

impl StringColumn {
    pub fn dictionary(&self) -> &Dictionary {
        &self.dict
    }

    pub fn codes(&self) -> &[Option<u32>] {
        &self.codes
    }

    pub fn get(&self, i: usize) -> Option<&str> {
        self.codes[i].map(|c| self.dict.get(c).as_ref())
    }

    pub fn push(&mut self, s: Option<&str>) {
        let code = s.map(|s| match self.dict.lookup(s) {
            Some(code) => code,
            None => Arc::make_mut(&mut self.dict).intern(s),
        });
        self.codes.push(code);
    }

    pub fn from_options<'a>(items: impl IntoIterator<Item = Option<&'a str>>) -> StringColumn {
        let mut col = StringColumn::default();
        for s in items {
            col.push(s);
        }
        col
    }

    /// Column over an existing dictionary.
    pub(crate) fn with_codes(dict: Arc<Dictionary>, codes: Vec<Option<u32>>) -> StringColumn {
        StringColumn { dict, codes }
    }

    pub(crate) fn dictionary_arc(&self) -> &Arc<Dictionary> {
        &self.dict
    }

    fn gather(&self, rows: &[u32]) -> StringColumn {
        StringColumn {
            dict: self.dict.clone(),
            codes: rows.iter().map(|&r| self.codes[r as usize]).collect(),
        }
    }
}

/// One column of values of a single scalar type; `None` is NULL.
#[derive(Clone, Debug)]
pub enum Column {
    Boolean(Vec<Option<bool>>),
    Number(Vec<Option<f64>>),
    String(StringColumn),
    Timestamp(Vec<Option<i64>>),
    Duration(Vec<Option<i64>>),
}

impl Column {
    pub fn new(ty: ScalarType) -> Column {
        match ty {
            ScalarType::Boolean => Column::Boolean(Vec::new()),
            ScalarType::Number => Column::Number(Vec::new()),
            ScalarType::String => Column::String(StringColumn::default()),
            ScalarType::Timestamp => Column::Timestamp(Vec::new()),
            ScalarType::Duration => Column::Duration(Vec::new()),
        }
    }

    /// Column of `len` NULLs.
    pub fn nulls(ty: ScalarType, len: usize) -> Column {
        match ty {
            ScalarType::Boolean => Column::Boolean(vec![None; len]),
            ScalarType::Number => Column::Number(vec![None; len]),
            ScalarType::String => {
                Column::String(StringColumn { dict: Arc::default(), codes: vec![None; len] })
            }
            ScalarType::Timestamp => Column::Timestamp(vec![None; len]),
            ScalarType::Duration => Column::Duration(vec![None; len]),
        }
    }

    /// Builds a column from values already known to match `ty`.
    pub fn from_values(ty: ScalarType, values: impl IntoIterator<Item = Value>) -> Column {
        let mut col = Column::new(ty);
        for v in values {
            col.push(v).expect("value type checked by caller");
        }
        col
    }

    pub fn ty(&self) -> ScalarType {
        match self {
            Column::Boolean(_) => ScalarType::Boolean,
            Column::Number(_) => ScalarType::Number,
            Column::String(_) => ScalarType::String,
            Column::Timestamp(_) => ScalarType::Timestamp,
            Column::Duration(_) => ScalarType::Duration,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Column::Boolean(v) => v.len(),
            Column::Number(v) => v.len(),
            Column::String(s) => s.codes.len(),
            Column::Timestamp(v) | Column::Duration(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_null(&self, i: usize) -> bool {
        match self {
            Column::Boolean(v) => v[i].is_none(),
            Column::Number(v) => v[i].is_none(),
            Column::String(s) => s.codes[i].is_none(),
            Column::Timestamp(v) | Column::Duration(v) => v[i].is_none(),
        }
    }

    pub fn get(&self, i: usize) -> Value {
        match self {
            Column::Boolean(v) => v[i].map_or(Value::Null, Value::Boolean),
            Column::Number(v) => v[i].map_or(Value::Null, Value::Number),
            Column::String(s) => {
                s.codes[i].map_or(Value::Null, |c| Value::String(s.dict.get(c).clone()))
            }
            Column::Timestamp(v) => v[i].map_or(Value::Null, Value::Timestamp),
            Column::Duration(v) => v[i].map_or(Value::Null, Value::Duration),
        }
    }

    /// Appends a value; returns the value back when its type does not fit.
    pub fn push(&mut self, value: Value) -> Result<(), Value> {
        match (self, value) {
            (Column::Boolean(v), Value::Null) => v.push(None),
            (Column::Number(v), Value::Null) => v.push(None),
            (Column::String(s), Value::Null) => s.push(None),
            (Column::Timestamp(v), Value::Null) | (Column::Duration(v), Value::Null) => {
                v.push(None)
            }
            (Column::Boolean(v), Value::Boolean(b)) => v.push(Some(b)),
            (Column::Number(v), Value::Number(n)) if !n.is_nan() => v.push(Some(n)),
            (Column::String(s), Value::String(x)) => s.push(Some(&x)),
            (Column::Timestamp(v), Value::Timestamp(t)) => v.push(Some(t)),
            (Column::Duration(v), Value::Duration(d)) => v.push(Some(d)),
            (_, other) => return Err(other),
        }
        Ok(())
    }

    /// Whether `value` could be pushed without a type error.
    pub fn accepts(ty: ScalarType, value: &Value) -> bool {
        match value {
            Value::Null => true,
            Value::Number(n) => ty == ScalarType::Number && !n.is_nan(),
            other => other.scalar_type() == Some(ty),
        }
    }

    /// Rows at the given indices, in the given order.
    pub fn gather(&self, rows: &[u32]) -> Column {
        fn pick<T: Copy>(v: &[Option<T>], rows: &[u32]) -> Vec<Option<T>> {
            rows.iter().map(|&r| v[r as usize]).collect()
        }
        match self {
            Column::Boolean(v) => Column::Boolean(pick(v, rows)),
            Column::Number(v) => Column::Number(pick(v, rows)),
            Column::String(s) => Column::String(s.gather(rows)),
            Column::Timestamp(v) => Column::Timestamp(pick(v, rows)),
            Column::Duration(v) => Column::Duration(pick(v, rows)),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Value> + '_ {
        (0..self.len()).map(move |i| self.get(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strings_share_dictionary_entries() {
        let mut col = Column::new(ScalarType::String);
        for s in ["Open ticket", "Close ticket", "Open ticket"] {
            col.push(Value::string(s)).unwrap();
        }
        let Column::String(s) = &col else { unreachable!() };
        assert_eq!(s.dictionary().len(), 2);
        assert_eq!(s.codes(), &[Some(0), Some(1), Some(0)]);
        assert_eq!(col.get(2), Value::string("Open ticket"));
    }

    #[test]
    fn push_rejects_wrong_type_and_nan() {
        let mut col = Column::new(ScalarType::Number);
        assert!(col.push(Value::string("x")).is_err());
        assert!(col.push(Value::Number(f64::NAN)).is_err());
        assert!(col.push(Value::Null).is_ok());
        assert_eq!(col.len(), 1);
    }

    #[test]
    fn gather_reorders() {
        let col = Column::from_values(
            ScalarType::Timestamp,
            [Value::Timestamp(1), Value::Null, Value::Timestamp(3)],
        );
        let g = col.gather(&[2, 0]);
        assert_eq!(g.iter().collect::<Vec<_>>(), vec![Value::Timestamp(3), Value::Timestamp(1)]);
    }
}
