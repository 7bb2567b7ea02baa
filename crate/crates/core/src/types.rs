//! Scalar types and values shared by every layer of the engine.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Serialize, Serializer};

/// Type of a column or expression. Identical on case and event level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum ScalarType {
    Boolean,
    Number,
    String,
    /// Integer milliseconds since the Unix epoch.
    Timestamp,
    /// Signed integer milliseconds.
    Duration,
}

impl ScalarType {
    pub fn name(self) -> &'static str {
        match self {
            ScalarType::Boolean => "Boolean",
            ScalarType::Number => "Number",
            ScalarType::String => "String",
            ScalarType::Timestamp => "Timestamp",
            ScalarType::Duration => "Duration",
        }
    }
}

impl fmt::Display for ScalarType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScalarType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "boolean" | "bool" => Ok(ScalarType::Boolean),
            "number" | "float" | "int" | "double" => Ok(ScalarType::Number),
            "string" | "text" => Ok(ScalarType::String),
            "timestamp" => Ok(ScalarType::Timestamp),
            "duration" => Ok(ScalarType::Duration),
            other => Err(format!("unknown type '{other}'")),
        }
    }
}

/// The two expression scopes of the type system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    Case,
    Event,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Case => f.write_str("case"),
            Level::Event => f.write_str("event"),
        }
    }
}

impl FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "case" => Ok(Level::Case),
            "event" => Ok(Level::Event),
            other => Err(format!("unknown level '{other}'")),
        }
    }
}

/// A single cell. `Null` is untyped; the owning column carries the type.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Null,
    Boolean(bool),
    Number(f64),
    String(Arc<str>),
    Timestamp(i64),
    Duration(i64),
}

impl Value {
    pub fn string(s: impl AsRef<str>) -> Value {
        Value::String(Arc::from(s.as_ref()))
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    /// Runtime type, `None` for NULL.
    pub fn scalar_type(&self) -> Option<ScalarType> {
        match self {
            Value::Null => None,
            Value::Boolean(_) => Some(ScalarType::Boolean),
            Value::Number(_) => Some(ScalarType::Number),
            Value::String(_) => Some(ScalarType::String),
            Value::Timestamp(_) => Some(ScalarType::Timestamp),
            Value::Duration(_) => Some(ScalarType::Duration),
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::String(s) => Some(s),
            _ => None,
        }
    }

    /// SQL-style comparison; `None` when either side is NULL or the types differ.
    pub fn sql_cmp(&self, other: &Value) -> Option<Ordering> {
        match (self, other) {
            (Value::Boolean(a), Value::Boolean(b)) => Some(a.cmp(b)),
            (Value::Number(a), Value::Number(b)) => a.partial_cmp(b),
            (Value::String(a), Value::String(b)) => Some(a.as_ref().cmp(b.as_ref())),
            (Value::Timestamp(a), Value::Timestamp(b)) => Some(a.cmp(b)),
            (Value::Duration(a), Value::Duration(b)) => Some(a.cmp(b)),
            _ => None,
        }
    }

    /// Total order used by ORDER BY and MIN/MAX: NULL sorts after every value.
    pub fn sort_cmp(&self, other: &Value) -> Ordering {
        match (self.is_null(), other.is_null()) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Greater,
            (false, true) => Ordering::Less,
            (false, false) => self.sql_cmp(other).unwrap_or(Ordering::Equal),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("NULL"),
            Value::Boolean(b) => write!(f, "{b}"),
            Value::Number(n) => write!(f, "{n}"),
            Value::String(s) => f.write_str(s),
            Value::Timestamp(t) | Value::Duration(t) => write!(f, "{t}"),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Null => serializer.serialize_none(),
            Value::Boolean(b) => serializer.serialize_bool(*b),
            Value::Number(n) => serializer.serialize_f64(*n),
            Value::String(s) => serializer.serialize_str(s),
            Value::Timestamp(t) | Value::Duration(t) => serializer.serialize_i64(*t),
        }
    }
}

/// Hashable wrapper for grouping and DISTINCT. Numbers compare by bit
/// pattern after folding -0.0 into 0.0.
#[derive(Clone, Debug)]
pub struct GroupKey(pub Value);

impl GroupKey {
    fn number_bits(n: f64) -> u64 {
        if n == 0.0 {
            0
        } else {
            n.to_bits()
        }
    }
}

impl PartialEq for GroupKey {
    fn eq(&self, other: &Self) -> bool {
        match (&self.0, &other.0) {
            (Value::Number(a), Value::Number(b)) => Self::number_bits(*a) == Self::number_bits(*b),
            (a, b) => a == b,
        }
    }
}

impl Eq for GroupKey {}

impl Hash for GroupKey {
    fn hash<H: Hasher>(&self, state: &mut H) {
        std::mem::discriminant(&self.0).hash(state);
        match &self.0 {
            Value::Null => {}
            Value::Boolean(b) => b.hash(state),
            Value::Number(n) => Self::number_bits(*n).hash(state),
            Value::String(s) => s.hash(state),
            Value::Timestamp(t) | Value::Duration(t) => t.hash(state),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_sorts_last() {
        let mut v = vec![Value::Null, Value::Number(2.0), Value::Number(1.0)];
        v.sort_by(|a, b| a.sort_cmp(b));
        assert_eq!(v, vec![Value::Number(1.0), Value::Number(2.0), Value::Null]);
    }

    #[test]
    fn comparison_with_null_is_unknown() {
        assert_eq!(Value::Null.sql_cmp(&Value::Number(1.0)), None);
        assert_eq!(Value::Timestamp(1).sql_cmp(&Value::Duration(1)), None);
    }

    #[test]
    fn group_key_folds_negative_zero() {
        use std::collections::HashSet;
        let set: HashSet<GroupKey> =
            [GroupKey(Value::Number(0.0)), GroupKey(Value::Number(-0.0))].into_iter().collect();
        assert_eq!(set.len(), 1);
    }

    #[test]
    fn type_names_parse_case_insensitively() {
        assert_eq!("timestamp".parse::<ScalarType>().unwrap(), ScalarType::Timestamp);
        assert!("blob".parse::<ScalarType>().is_err());
    }
}
