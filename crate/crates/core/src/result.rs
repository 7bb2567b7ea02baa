//! Flat, typed query output and its wire encodings.

use serde::Serialize;

use crate::types::{ScalarType, Value};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultColumn {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: ScalarType,
}

impl ResultColumn {
    pub fn new(name: impl Into<String>, ty: ScalarType) -> ResultColumn {
        ResultColumn { name: name.into(), ty }
    }
}

/// Row-major result. Serializes to `{"columns": [...], "rows": [[...]]}`
/// with timestamps and durations as integer milliseconds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultTable {
    pub columns: Vec<ResultColumn>,
    pub rows: Vec<Vec<Value>>,
}

impl ResultTable {
    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name.eq_ignore_ascii_case(name))
    }

    /// Values of one column, top to bottom.
    pub fn column_values(&self, index: usize) -> Vec<Value> {
        self.rows.iter().map(|r| r[index].clone()).collect()
    }

    /// First cell whose runtime type differs from its declared column type.
    pub fn type_violation(&self) -> Option<(usize, usize)> {
        for (r, row) in self.rows.iter().enumerate() {
            if row.len() != self.columns.len() {
                return Some((r, row.len()));
            }
            for (c, v) in row.iter().enumerate() {
                if let Some(t) = v.scalar_type() {
                    if t != self.columns[c].ty {
                        return Some((r, c));
                    }
                }
            }
        }
        None
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("result tables always serialize")
    }

    /// CSV with a header row; NULL is an empty field.
    pub fn to_csv(&self, delimiter: u8) -> String {
        let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(Vec::new());
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))
            .expect("writing to memory");
        for row in &self.rows {
            w.write_record(row.iter().map(cell_text)).expect("writing to memory");
        }
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv output is utf-8")
    }

    /// Aligned plain-text table for terminals.
    pub fn to_text(&self) -> String {
        let header: Vec<String> =
            self.columns.iter().map(|c| format!("{} ({})", c.name, c.ty)).collect();
        let body: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|v| if v.is_null() { "NULL".into() } else { cell_text(v) }).collect())
            .collect();
        let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
        for row in &body {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let line = |cells: &[String]| {
            let padded: Vec<String> = cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}", w = *w))
                .collect();
            format!("| {} |\n", padded.join(" | "))
        };
        let rule = format!(
            "+{}+\n",
            widths.iter().map(|w| "-".repeat(w + 2)).collect::<Vec<_>>().join("+")
        );
        let mut out = rule.clone();
        out.push_str(&line(&header));
        out.push_str(&rule);
        for row in &body {
            out.push_str(&line(row));
        }
        out.push_str(&rule);
        let n = self.rows.len();
        out.push_str(&format!("({n} row{})\n", if n == 1 { "" } else { "s" }));
        out
    }
}

fn cell_text(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        other => other.to_string(),
    }
}
