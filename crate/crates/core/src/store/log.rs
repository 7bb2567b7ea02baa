use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use crate::error::StoreError;
use crate::result::ResultTable;
use crate::store::column::Column;
use crate::store::schema::Schema;
use crate::store::snapshot::Snapshot;
use crate::types::{Level, Value};

/// An event log: a table of cases, each owning an end-time-ordered run of
/// events in the event columns.
///
/// Columns are reference counted so snapshots can share them; appending
/// while a snapshot is alive copies the touched column first.
#[derive(Clone, Debug)]
pub struct EventLog {
    id: String,
    schema: Arc<Schema>,
    case_columns: Vec<Arc<Column>>,
    event_columns: Vec<Arc<Column>>,
    offsets: Arc<Vec<usize>>,
    case_ids: HashSet<Arc<str>>,
}

impl EventLog {
    pub fn new(id: impl Into<String>, schema: Schema) -> EventLog {
        let case_columns =
            schema.case_attributes.iter().map(|a| Arc::new(Column::new(a.ty))).collect();
        let event_columns =
            schema.event_attributes.iter().map(|a| Arc::new(Column::new(a.ty))).collect();
        EventLog {
            id: id.into(),
            schema: Arc::new(schema),
            case_columns,
            event_columns,
            offsets: Arc::new(vec![0]),
            case_ids: HashSet::new(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn schema_arc(&self) -> Arc<Schema> {
        self.schema.clone()
    }

    pub fn case_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn event_count(&self) -> usize {
        *self.offsets.last().expect("offsets start with 0")
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn case_column(&self, index: usize) -> &Column {
        &self.case_columns[index]
    }

    pub fn event_column(&self, index: usize) -> &Column {
        &self.event_columns[index]
    }

    /// Appends a case from name-keyed maps. Names are matched
    /// case-insensitively; attributes left out are stored as NULL.
    pub fn append_case(
        &mut self,
        case_values: &HashMap<String, Value>,
        events: &[HashMap<String, Value>],
    ) -> Result<usize, StoreError> {
        let case_row = self.row_from_map(Level::Case, case_values)?;
        let event_rows = events
            .iter()
            .map(|e| self.row_from_map(Level::Event, e))
            .collect::<Result<Vec<_>, _>>()?;
        self.append_case_rows(case_row, event_rows)
    }

    fn row_from_map(
        &self,
        level: Level,
        values: &HashMap<String, Value>,
    ) -> Result<Vec<Value>, StoreError> {
        let mut row = vec![Value::Null; self.schema.attributes(level).len()];
        for (name, value) in values {
            let idx = self
                .schema
                .index_of(level, name)
                .ok_or_else(|| StoreError::UnknownColumn(name.clone()))?;
            row[idx] = value.clone();
        }
        Ok(row)
    }

    /// Appends a case from positional rows in schema order. Events are stably
    /// sorted by `end_time`, so ties keep their input order. Nothing is
    /// stored if any check fails.
    pub fn append_case_rows(
        &mut self,
        case_row: Vec<Value>,
        mut events: Vec<Vec<Value>>,
    ) -> Result<usize, StoreError> {
        if events.is_empty() {
            return Err(StoreError::EmptyCase);
        }
        self.check_row(Level::Case, &case_row)?;
        for e in &events {
            self.check_row(Level::Event, e)?;
        }
        let case_id = match &case_row[self.schema.case_id_index()] {
            Value::String(s) => s.clone(),
            _ => unreachable!("checked above"),
        };
        if self.case_ids.contains(&case_id) {
            return Err(StoreError::DuplicateCaseId(case_id.to_string()));
        }

        let end = self.schema.end_time_index();
        let key = |row: &Vec<Value>| match row[end] {
            Value::Timestamp(t) => t,
            _ => unreachable!("checked above"),
        };
        events.sort_by_key(key);

        for (col, v) in self.case_columns.iter_mut().zip(case_row) {
            Arc::make_mut(col).push(v).expect("checked above");
        }
        let n = events.len();
        for row in events {
            for (col, v) in self.event_columns.iter_mut().zip(row) {
                Arc::make_mut(col).push(v).expect("checked above");
            }
        }
        let total = self.event_count() + n;
        Arc::make_mut(&mut self.offsets).push(total);
        self.case_ids.insert(case_id);
        Ok(self.case_count() - 1)
    }

    fn check_row(&self, level: Level, row: &[Value]) -> Result<(), StoreError> {
        let attrs = self.schema.attributes(level);
        if row.len() != attrs.len() {
            return Err(StoreError::InvalidSchema(format!(
                "{level} row has {} values, schema declares {}",
                row.len(),
                attrs.len()
            )));
        }
        for (i, (attr, v)) in attrs.iter().zip(row).enumerate() {
            if v.is_null() {
                if self.schema.is_required(level, i) {
                    return Err(StoreError::MissingRequiredField(attr.name.clone()));
                }
            } else if !Column::accepts(attr.ty, v) {
                return Err(StoreError::TypeMismatch {
                    column: attr.name.clone(),
                    expected: attr.ty,
                    found: v.scalar_type().map_or("NULL".into(), |t| t.to_string()),
                });
            }
        }
        Ok(())
    }

    /// Immutable view over the requested columns.
    pub fn snapshot(&self, columns: &[(Level, &str)]) -> Result<Snapshot, StoreError> {
        let mut case = vec![None; self.case_columns.len()];
        let mut event = vec![None; self.event_columns.len()];
        for (level, name) in columns {
            let idx = self
                .schema
                .index_of(*level, name)
                .ok_or_else(|| StoreError::UnknownColumn(name.to_string()))?;
            match level {
                Level::Case => case[idx] = Some(self.case_columns[idx].clone()),
                Level::Event => event[idx] = Some(self.event_columns[idx].clone()),
            }
        }
        Ok(self.make_snapshot(case, event))
    }

    /// Snapshot of columns by schema index.
    pub fn snapshot_indices(&self, columns: &[(Level, usize)]) -> Snapshot {
        let mut case = vec![None; self.case_columns.len()];
        let mut event = vec![None; self.event_columns.len()];
        for &(level, idx) in columns {
            match level {
                Level::Case => case[idx] = Some(self.case_columns[idx].clone()),
                Level::Event => event[idx] = Some(self.event_columns[idx].clone()),
            }
        }
        self.make_snapshot(case, event)
    }

    pub fn snapshot_all(&self) -> Snapshot {
        self.make_snapshot(
            self.case_columns.iter().cloned().map(Some).collect(),
            self.event_columns.iter().cloned().map(Some).collect(),
        )
    }

    fn make_snapshot(
        &self,
        case: Vec<Option<Arc<Column>>>,
        event: Vec<Option<Arc<Column>>>,
    ) -> Snapshot {
        Snapshot::new(self.id.clone(), self.schema.clone(), case, event, self.offsets.clone())
    }

    /// One row per event: every case attribute followed by every event
    /// attribute, in case order and then event order.
    pub fn flatten(&self) -> ResultTable {
        self.snapshot_all().flatten().expect("full snapshot has every column")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::schema::Attribute;
    use crate::types::ScalarType;

    fn log() -> EventLog {
        let schema = Schema::new(
            vec![Attribute::new("case_id", ScalarType::String)],
            vec![
                Attribute::new("event_name", ScalarType::String),
                Attribute::new("end_time", ScalarType::Timestamp),
            ],
        )
        .unwrap();
        EventLog::new("t", schema)
    }

    fn ev(name: &str, t: i64) -> Vec<Value> {
        vec![Value::string(name), Value::Timestamp(t)]
    }

    fn names(log: &EventLog) -> Vec<String> {
        log.event_column(0).iter().map(|v| v.to_string()).collect()
    }

    #[test]
    fn events_are_sorted_stably() {
        let mut l = log();
        l.append_case_rows(vec![Value::string("1")], vec![ev("Close", 300), ev("Open", 100)])
            .unwrap();
        l.append_case_rows(vec![Value::string("2")], vec![ev("A", 100), ev("B", 100)]).unwrap();
        assert_eq!(names(&l), ["Open", "Close", "A", "B"]);
        assert_eq!(l.offsets(), &[0, 2, 4]);
    }

    #[test]
    fn rejects_bad_cases_atomically() {
        let mut l = log();
        assert_eq!(l.append_case_rows(vec![Value::string("1")], vec![]), Err(StoreError::EmptyCase));
        let err = l
            .append_case_rows(
                vec![Value::string("1")],
                vec![ev("A", 1), vec![Value::string("B"), Value::Number(2.0)]],
            )
            .unwrap_err();
        assert_eq!(err.code(), "TypeMismatch");
        let err = l
            .append_case_rows(vec![Value::string("1")], vec![vec![Value::Null, Value::Timestamp(1)]])
            .unwrap_err();
        assert_eq!(err, StoreError::MissingRequiredField("event_name".into()));
        assert_eq!(l.event_count(), 0);
        l.append_case_rows(vec![Value::string("1")], vec![ev("A", 1)]).unwrap();
        let dup = l.append_case_rows(vec![Value::string("1")], vec![ev("A", 1)]);
        assert_eq!(dup, Err(StoreError::DuplicateCaseId("1".into())));
        assert_eq!(l.case_count(), 1);
    }

    #[test]
    fn map_based_append_matches_names_case_insensitively() {
        let mut l = log();
        let case: HashMap<String, Value> = [("CASE_ID".to_string(), Value::string("7"))].into();
        let e: HashMap<String, Value> = [
            ("Event_Name".to_string(), Value::string("x")),
            ("end_time".to_string(), Value::Timestamp(5)),
        ]
        .into();
        assert_eq!(l.append_case(&case, &[e]).unwrap(), 0);
        let bad: HashMap<String, Value> = [("nope".to_string(), Value::Null)].into();
        assert_eq!(l.append_case(&bad, &[]), Err(StoreError::UnknownColumn("nope".into())));
    }

    #[test]
    fn snapshot_ignores_later_appends() {
        let mut l = log();
        l.append_case_rows(vec![Value::string("1")], vec![ev("A", 1)]).unwrap();
        let snap = l.snapshot(&[(Level::Event, "end_time")]).unwrap();
        l.append_case_rows(vec![Value::string("2")], vec![ev("B", 2), ev("C", 3)]).unwrap();
        assert_eq!(snap.case_count(), 1);
        assert_eq!(snap.event_count(), 1);
        assert_eq!(snap.event_column(1).unwrap().len(), 1);
        assert_eq!(l.event_count(), 3);
        assert!(l.snapshot(&[(Level::Case, "nonexistent")]).is_err());
    }
}
