use std::ops::Range;
use std::sync::Arc;

use crate::error::ExecError;
use crate::result::{ResultColumn, ResultTable};
use crate::store::column::Column;
use crate::store::schema::Schema;
use crate::types::Level;

/// Immutable view of selected columns of a log at one point in time.
#[derive(Clone, Debug)]
pub struct Snapshot {
    log_id: String,
    schema: Arc<Schema>,
    case_columns: Vec<Option<Arc<Column>>>,
    event_columns: Vec<Option<Arc<Column>>>,
    offsets: Arc<Vec<usize>>,
}

impl Snapshot {
    pub(crate) fn new(
        log_id: String,
        schema: Arc<Schema>,
        case_columns: Vec<Option<Arc<Column>>>,
        event_columns: Vec<Option<Arc<Column>>>,
        offsets: Arc<Vec<usize>>,
    ) -> Snapshot {
        Snapshot { log_id, schema, case_columns, event_columns, offsets }
    }

    pub fn log_id(&self) -> &str {
        &self.log_id
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn case_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn event_count(&self) -> usize {
        self.offsets[self.offsets.len() - 1]
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn event_range(&self, case: usize) -> Range<usize> {
        self.offsets[case]..self.offsets[case + 1]
    }

    pub fn column(&self, level: Level, index: usize) -> Result<&Column, ExecError> {
        let slot = match level {
            Level::Case => self.case_columns.get(index),
            Level::Event => self.event_columns.get(index),
        };
        slot.and_then(|c| c.as_deref()).ok_or_else(|| {
            let name = self
                .schema
                .attributes(level)
                .get(index)
                .map_or_else(|| format!("#{index}"), |a| a.name.clone());
            ExecError::SnapshotColumnMissing(format!("{level}.{name}"))
        })
    }

    pub fn case_column(&self, index: usize) -> Result<&Column, ExecError> {
        self.column(Level::Case, index)
    }

    pub fn event_column(&self, index: usize) -> Result<&Column, ExecError> {
        self.column(Level::Event, index)
    }

    pub fn has_column(&self, level: Level, index: usize) -> bool {
        self.column(level, index).is_ok()
    }

    /// `(level, name)` of every captured column, case level first.
    pub fn columns(&self) -> Vec<(Level, String)> {
        let mut out = Vec::new();
        for (level, cols) in [(Level::Case, &self.case_columns), (Level::Event, &self.event_columns)]
        {
            for (i, c) in cols.iter().enumerate() {
                if c.is_some() {
                    out.push((level, self.schema.attributes(level)[i].name.clone()));
                }
            }
        }
        out
    }

    /// Case index of every event, in storage order.
    pub fn event_case_index(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.event_count());
        for case in 0..self.case_count() {
            out.extend(std::iter::repeat_n(case as u32, self.event_range(case).len()));
        }
        out
    }

    /// Flattens the captured columns: one row per event, case attributes
    /// repeated for each of the case's events.
    pub fn flatten(&self) -> Result<ResultTable, ExecError> {
        let mut columns = Vec::new();
        let mut sources = Vec::new();
        for level in [Level::Case, Level::Event] {
            for (i, attr) in self.schema.attributes(level).iter().enumerate() {
                columns.push(ResultColumn::new(attr.name.clone(), attr.ty));
                sources.push(self.column(level, i)?);
            }
        }
        let n_case = self.schema.case_attributes.len();
        let mut rows = Vec::with_capacity(self.event_count());
        for case in 0..self.case_count() {
            for event in self.event_range(case) {
                let row = sources
                    .iter()
                    .enumerate()
                    .map(|(k, col)| col.get(if k < n_case { case } else { event }))
                    .collect();
                rows.push(row);
            }
        }
        Ok(ResultTable { columns, rows })
    }
}
