use serde::Serialize;

use crate::error::StoreError;
use crate::types::{Level, ScalarType};

pub const CASE_ID: &str = "case_id";
pub const EVENT_NAME: &str = "event_name";
pub const END_TIME: &str = "end_time";
pub const START_TIME: &str = "start_time";

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Attribute {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: ScalarType,
}

impl Attribute {
    pub fn new(name: impl Into<String>, ty: ScalarType) -> Attribute {
        Attribute { name: name.into(), ty }
    }
}

/// Case-level and event-level attribute declarations of a log.
///
/// Names are unique per level, compared case-insensitively; the declared
/// spelling is kept for display.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Schema {
    pub case_attributes: Vec<Attribute>,
    pub event_attributes: Vec<Attribute>,
    #[serde(skip)]
    case_id: usize,
    #[serde(skip)]
    event_name: usize,
    #[serde(skip)]
    end_time: usize,
    #[serde(skip)]
    start_time: Option<usize>,
}

impl Schema {
    pub fn new(
        case_attributes: Vec<Attribute>,
        event_attributes: Vec<Attribute>,
    ) -> Result<Schema, StoreError> {
        check_unique(&case_attributes, Level::Case)?;
        check_unique(&event_attributes, Level::Event)?;
        let required = |attrs: &[Attribute], name: &str, ty: ScalarType| {
            let idx = find(attrs, name).ok_or_else(|| {
                StoreError::InvalidSchema(format!("missing required column '{name}'"))
            })?;
            if attrs[idx].ty != ty {
                return Err(StoreError::InvalidSchema(format!(
                    "column '{name}' must have type {ty}, not {}",
                    attrs[idx].ty
                )));
            }
            Ok(idx)
        };
        let case_id = required(&case_attributes, CASE_ID, ScalarType::String)?;
        let event_name = required(&event_attributes, EVENT_NAME, ScalarType::String)?;
        let end_time = required(&event_attributes, END_TIME, ScalarType::Timestamp)?;
        let start_time = match find(&event_attributes, START_TIME) {
            Some(_) => Some(required(&event_attributes, START_TIME, ScalarType::Timestamp)?),
            None => None,
        };
        Ok(Schema { case_attributes, event_attributes, case_id, event_name, end_time, start_time })
    }

    pub fn attributes(&self, level: Level) -> &[Attribute] {
        match level {
            Level::Case => &self.case_attributes,
            Level::Event => &self.event_attributes,
        }
    }

    pub fn index_of(&self, level: Level, name: &str) -> Option<usize> {
        find(self.attributes(level), name)
    }

    pub fn case_id_index(&self) -> usize {
        self.case_id
    }

    pub fn event_name_index(&self) -> usize {
        self.event_name
    }

    pub fn end_time_index(&self) -> usize {
        self.end_time
    }

    pub fn start_time_index(&self) -> Option<usize> {
        self.start_time
    }

    /// Whether the column may not hold NULL.
    pub fn is_required(&self, level: Level, index: usize) -> bool {
        match level {
            Level::Case => index == self.case_id,
            Level::Event => index == self.event_name || index == self.end_time,
        }
    }
}

fn find(attrs: &[Attribute], name: &str) -> Option<usize> {
    attrs.iter().position(|a| a.name.eq_ignore_ascii_case(name))
}

fn check_unique(attrs: &[Attribute], level: Level) -> Result<(), StoreError> {
    for (i, a) in attrs.iter().enumerate() {
        if attrs[..i].iter().any(|b| b.name.eq_ignore_ascii_case(&a.name)) {
            return Err(StoreError::InvalidSchema(format!(
                "duplicate {level} attribute '{}'",
                a.name
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn events() -> Vec<Attribute> {
        vec![
            Attribute::new("event_name", ScalarType::String),
            Attribute::new("end_time", ScalarType::Timestamp),
        ]
    }

    #[test]
    fn requires_core_columns() {
        let err = Schema::new(
            vec![Attribute::new("case_id", ScalarType::String)],
            vec![Attribute::new("event_name", ScalarType::String)],
        )
        .unwrap_err();
        assert_eq!(err.code(), "InvalidSchema");
        assert!(Schema::new(vec![], events()).is_err());
    }

    #[test]
    fn names_are_case_insensitive_but_preserved() {
        let s = Schema::new(vec![Attribute::new("case_ID", ScalarType::String)], events()).unwrap();
        assert_eq!(s.index_of(Level::Case, "CASE_id"), Some(0));
        assert_eq!(s.case_attributes[0].name, "case_ID");
        let dup = Schema::new(
            vec![
                Attribute::new("case_id", ScalarType::String),
                Attribute::new("Case_Id", ScalarType::String),
            ],
            events(),
        );
        assert!(dup.is_err());
    }

    #[test]
    fn start_time_must_be_timestamp() {
        let mut ev = events();
        ev.push(Attribute::new("start_time", ScalarType::String));
        assert!(Schema::new(vec![Attribute::new("case_id", ScalarType::String)], ev).is_err());
    }
}
