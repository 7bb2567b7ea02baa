use crate::types::{Level, Value};

/// Whether `values` (one per source row) is constant within every group of
/// row indices. NULL only equals NULL.
pub fn is_constant_per_case(values: &[Value], groups: &[Vec<usize>]) -> bool {
    groups.iter().all(|rows| match rows.split_first() {
        Some((first, rest)) => rest.iter().all(|&r| values[r] == values[*first]),
        None => true,
    })
}

/// Assigns each column to the case level iff its value is constant within
/// every case, otherwise to the event level. Single-event cases are
/// trivially constant.
pub fn infer_attribute_levels(columns: &[Vec<Value>], groups: &[Vec<usize>]) -> Vec<Level> {
    columns
        .iter()
        .map(|col| if is_constant_per_case(col, groups) { Level::Case } else { Level::Event })
        .collect()
}
