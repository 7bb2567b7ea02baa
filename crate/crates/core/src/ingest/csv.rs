use std::collections::HashMap;
use std::io::Read;

use crate::error::{IngestError, StoreError};
use crate::ingest::config::{ColumnRole, CsvIngestConfig};
use crate::ingest::levels::{infer_attribute_levels, is_constant_per_case};
use crate::ingest::parse_timestamp;
use crate::store::{Attribute, EventLog, Schema, CASE_ID, END_TIME, EVENT_NAME, START_TIME};
use crate::types::{Level, ScalarType, Value};

struct SourceColumn {
    header: String,
    role: ColumnRole,
    ty: ScalarType,
    level: Level,
    values: Vec<Value>,
}

/// Name used in the schema: role columns take the canonical role name
/// unless the header already spells it.
fn schema_name(header: &str, role: ColumnRole) -> String {
    let canonical = match role {
        ColumnRole::CaseId => CASE_ID,
        ColumnRole::EventName => EVENT_NAME,
        ColumnRole::EndTime => END_TIME,
        ColumnRole::StartTime => START_TIME,
        ColumnRole::Attribute => return header.to_string(),
    };
    if header.eq_ignore_ascii_case(canonical) {
        header.to_string()
    } else {
        canonical.to_string()
    }
}

fn lookup<'a, T>(map: &'a std::collections::BTreeMap<String, T>, header: &str) -> Option<&'a T> {
    map.get(header)
        .or_else(|| map.iter().find(|(k, _)| k.eq_ignore_ascii_case(header)).map(|(_, v)| v))
}

fn csv_error(e: csv::Error) -> IngestError {
    let row = e.position().map(|p| p.record());
    match row {
        Some(r) if r > 0 => IngestError::Csv(format!("row {r}: {e}")),
        _ => IngestError::Csv(e.to_string()),
    }
}

fn resolve_roles(headers: &[String], config: &CsvIngestConfig) -> Result<Vec<ColumnRole>, IngestError> {
    let mut roles = vec![None; headers.len()];
    for (name, role) in &config.column_roles {
        let idx = headers
            .iter()
            .position(|h| h == name)
            .or_else(|| headers.iter().position(|h| h.eq_ignore_ascii_case(name)))
            .ok_or_else(|| {
                IngestError::InvalidConfig(format!("role given for unknown column '{name}'"))
            })?;
        roles[idx] = Some(*role);
    }
    let implicit = [
        (CASE_ID, ColumnRole::CaseId),
        (EVENT_NAME, ColumnRole::EventName),
        (END_TIME, ColumnRole::EndTime),
        (START_TIME, ColumnRole::StartTime),
    ];
    for (name, role) in implicit {
        if roles.contains(&Some(role)) {
            continue;
        }
        if let Some(idx) = headers.iter().position(|h| h.eq_ignore_ascii_case(name)) {
            if roles[idx].is_none() {
                roles[idx] = Some(role);
            }
        }
    }
    let roles: Vec<ColumnRole> = roles.into_iter().map(|r| r.unwrap_or(ColumnRole::Attribute)).collect();
    for (role, name, required) in [
        (ColumnRole::CaseId, CASE_ID, true),
        (ColumnRole::EventName, EVENT_NAME, true),
        (ColumnRole::EndTime, END_TIME, true),
        (ColumnRole::StartTime, START_TIME, false),
    ] {
        match roles.iter().filter(|r| **r == role).count() {
            0 if required => {
                return Err(IngestError::InvalidConfig(format!("no column has the role {name}")))
            }
            0 | 1 => {}
            _ => {
                return Err(IngestError::InvalidConfig(format!(
                    "more than one column has the role {name}"
                )))
            }
        }
    }
    Ok(roles)
}

fn infer_type(raw: &[&str]) -> ScalarType {
    let present: Vec<&str> = raw.iter().copied().filter(|s| !s.is_empty()).collect();
    if present.is_empty() {
        ScalarType::String
    } else if present.iter().all(|s| s.eq_ignore_ascii_case("true") || s.eq_ignore_ascii_case("false")) {
        ScalarType::Boolean
    } else if present.iter().all(|s| s.parse::<f64>().is_ok_and(|n| !n.is_nan())) {
        ScalarType::Number
    } else {
        ScalarType::String
    }
}

fn parse_cell(
    raw: &str,
    ty: ScalarType,
    row: usize,
    column: &str,
    config: &CsvIngestConfig,
) -> Result<Value, IngestError> {
    if raw.is_empty() {
        return Ok(Value::Null);
    }
    let invalid =
        || IngestError::InvalidValue { row, column: column.to_string(), value: raw.to_string() };
    Ok(match ty {
        ScalarType::String => Value::string(raw),
        ScalarType::Boolean => match raw.to_ascii_lowercase().as_str() {
            "true" => Value::Boolean(true),
            "false" => Value::Boolean(false),
            _ => return Err(invalid()),
        },
        ScalarType::Number => match raw.parse::<f64>() {
            Ok(n) if !n.is_nan() => Value::Number(n),
            _ => return Err(invalid()),
        },
        ScalarType::Duration => Value::Duration(raw.trim().parse().map_err(|_| invalid())?),
        ScalarType::Timestamp => Value::Timestamp(
            parse_timestamp(raw, &config.timestamp_format)
                .ok_or_else(|| IngestError::UnparseableTimestamp { row, value: raw.to_string() })?,
        ),
    })
}

/// Reads a delimited file with a header row into an event log.
///
/// Rows are grouped by case id in order of first appearance. Each
/// attribute column without a level override goes to the case level iff it
/// is constant within every case.
pub fn ingest_csv<R: Read>(
    reader: R,
    config: &CsvIngestConfig,
    log_id: &str,
) -> Result<EventLog, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(config.delimiter)
        .has_headers(true)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers().map_err(csv_error)?.iter().map(String::from).collect();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(IngestError::MissingHeader);
    }
    for (i, h) in headers.iter().enumerate() {
        if headers[..i].iter().any(|g| g.eq_ignore_ascii_case(h)) {
            return Err(StoreError::InvalidSchema(format!("duplicate column '{h}'")).into());
        }
    }
    let records = rdr.records().collect::<Result<Vec<_>, _>>().map_err(csv_error)?;
    let roles = resolve_roles(&headers, config)?;

    for name in config.level_overrides.keys().chain(config.type_overrides.keys()) {
        if !headers.iter().any(|h| h.eq_ignore_ascii_case(name)) {
            return Err(IngestError::InvalidConfig(format!("override for unknown column '{name}'")));
        }
    }

    let mut columns = Vec::with_capacity(headers.len());
    for (c, (header, role)) in headers.iter().zip(&roles).enumerate() {
        let raw: Vec<&str> = records.iter().map(|r| &r[c]).collect();
        let (ty, level) = match role {
            ColumnRole::CaseId => (ScalarType::String, Level::Case),
            ColumnRole::EventName => (ScalarType::String, Level::Event),
            ColumnRole::EndTime | ColumnRole::StartTime => (ScalarType::Timestamp, Level::Event),
            ColumnRole::Attribute => (
                lookup(&config.type_overrides, header).copied().unwrap_or_else(|| infer_type(&raw)),
                Level::Event,
            ),
        };
        if *role != ColumnRole::Attribute {
            if let Some(l) = lookup(&config.level_overrides, header) {
                if *l != level {
                    return Err(IngestError::InvalidConfig(format!(
                        "column '{header}' is required at the {level} level"
                    )));
                }
            }
            if let Some(t) = lookup(&config.type_overrides, header) {
                if *t != ty {
                    return Err(IngestError::InvalidConfig(format!(
                        "column '{header}' must have type {ty}"
                    )));
                }
            }
        }
        let mut values = Vec::with_capacity(raw.len());
        for (r, cell) in raw.iter().enumerate() {
            let row = r + 1;
            let required = matches!(role, ColumnRole::CaseId | ColumnRole::EventName | ColumnRole::EndTime);
            if required && cell.is_empty() {
                let column = schema_name(header, *role);
                return Err(IngestError::MissingRequiredValue { row, column });
            }
            values.push(parse_cell(cell, ty, row, header, config)?);
        }
        columns.push(SourceColumn { header: header.clone(), role: *role, ty, level, values });
    }

    let case_col = roles.iter().position(|r| *r == ColumnRole::CaseId).expect("role resolved");
    let mut group_of: HashMap<&str, usize> = HashMap::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (r, v) in columns[case_col].values.iter().enumerate() {
        let key = v.as_str().expect("case ids are strings");
        let g = *group_of.entry(key).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(r);
    }

    let attr_idx: Vec<usize> =
        (0..columns.len()).filter(|&c| columns[c].role == ColumnRole::Attribute).collect();
    let attr_values: Vec<Vec<Value>> = attr_idx.iter().map(|&c| columns[c].values.clone()).collect();
    let inferred = infer_attribute_levels(&attr_values, &groups);
    for (&c, level) in attr_idx.iter().zip(inferred) {
        let col = &mut columns[c];
        col.level = match lookup(&config.level_overrides, &col.header) {
            Some(Level::Case) => {
                if !is_constant_per_case(&col.values, &groups) {
                    let case_id = groups
                        .iter()
                        .find(|rows| rows.iter().any(|&r| col.values[r] != col.values[rows[0]]))
                        .map(|rows| columns[case_col].values[rows[0]].to_string())
                        .unwrap_or_default();
                    return Err(IngestError::InconsistentCaseAttribute {
                        case_id,
                        column: columns[c].header.clone(),
                    });
                }
                Level::Case
            }
            Some(Level::Event) => Level::Event,
            None => level,
        };
    }

    let case_cols: Vec<usize> = (0..columns.len()).filter(|&c| columns[c].level == Level::Case).collect();
    let event_cols: Vec<usize> = (0..columns.len()).filter(|&c| columns[c].level == Level::Event).collect();
    let attrs = |idx: &[usize]| -> Vec<Attribute> {
        idx.iter().map(|&c| Attribute::new(schema_name(&columns[c].header, columns[c].role), columns[c].ty)).collect()
    };
    let schema = Schema::new(attrs(&case_cols), attrs(&event_cols))?;
    let mut log = EventLog::new(log_id, schema);
    for rows in &groups {
        let case_row = case_cols.iter().map(|&c| columns[c].values[rows[0]].clone()).collect();
        let events = rows
            .iter()
            .map(|&r| event_cols.iter().map(|&c| columns[c].values[r].clone()).collect())
            .collect();
        log.append_case_rows(case_row, events)?;
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SUPPORT_LOG: &str = "case_ID,customer_ID,final_status,event_name,end_time,status
1001,C2001,done,Open ticket,1675086864052,none
1001,C2001,done,Assign ticket,1675160180724,open
1001,C2001,done,Close ticket,1675220315296,done
1002,C2002,blocked,Open ticket,1675147138009,none
1002,C2002,blocked,Assign ticket,1675213914098,open
1002,C2002,blocked,Close ticket,1675282027657,blocked
1002,C2002,blocked,Open ticket,1675414104525,blocked
";

    fn names(attrs: &[Attribute]) -> Vec<&str> {
        attrs.iter().map(|a| a.name.as_str()).collect()
    }

    #[test]
    fn table_one_levels_are_inferred() {
        let log = ingest_csv(SUPPORT_LOG.as_bytes(), &CsvIngestConfig::default(), "support").unwrap();
        assert_eq!(names(&log.schema().case_attributes), ["case_ID", "customer_ID", "final_status"]);
        assert_eq!(names(&log.schema().event_attributes), ["event_name", "end_time", "status"]);
        assert_eq!(log.offsets(), &[0, 3, 7]);
        assert_eq!(log.schema().case_attributes[1].ty, ScalarType::String);
    }

    #[test]
    fn duplicate_headers_are_rejected() {
        let text = "case_id,event_name,end_time,Event_Name\n1,a,1,a\n";
        let err = ingest_csv(text.as_bytes(), &CsvIngestConfig::default(), "x").unwrap_err();
        assert_eq!(err.code(), "InvalidSchema");
    }

    #[test]
    fn bad_timestamp_reports_row() {
        let text = "case_id,event_name,end_time\n1,a,1\n1,b,2\n1,c,not-a-time\n";
        let err = ingest_csv(text.as_bytes(), &CsvIngestConfig::default(), "x").unwrap_err();
        assert_eq!(err, IngestError::UnparseableTimestamp { row: 3, value: "not-a-time".into() });
    }

    #[test]
    fn varying_case_override_is_rejected() {
        let text = "case_id,event_name,end_time,owner\n1001,a,1,ann\n1001,b,2,bob\n";
        let cfg = CsvIngestConfig::default().with_level("owner", Level::Case);
        let err = ingest_csv(text.as_bytes(), &cfg, "x").unwrap_err();
        assert_eq!(
            err,
            IngestError::InconsistentCaseAttribute { case_id: "1001".into(), column: "owner".into() }
        );
    }

    #[test]
    fn missing_header_and_values() {
        let err = ingest_csv("".as_bytes(), &CsvIngestConfig::default(), "x").unwrap_err();
        assert_eq!(err, IngestError::MissingHeader);
        let err = ingest_csv(
            "case_id,event_name,end_time\n1,,5\n".as_bytes(),
            &CsvIngestConfig::default(),
            "x",
        )
        .unwrap_err();
        assert_eq!(err, IngestError::MissingRequiredValue { row: 1, column: "event_name".into() });
        let err = ingest_csv("a,b\n1,2\n".as_bytes(), &CsvIngestConfig::default(), "x").unwrap_err();
        assert_eq!(err.code(), "InvalidConfig");
    }

    #[test]
    fn roles_rename_and_iso_timestamps() {
        let text = "Case\tActivity\tTime\tcost\tok\nA\tx\t2023-01-30T12:00:00Z\t1.5\ttrue\nA\ty\t2023-01-30 13:00:00\t\tfalse\n";
        let mut cfg = CsvIngestConfig::tsv()
            .with_role("Case", ColumnRole::CaseId)
            .with_role("Activity", ColumnRole::EventName)
            .with_role("Time", ColumnRole::EndTime);
        cfg.timestamp_format = crate::ingest::TimestampFormat::Iso8601;
        let log = ingest_csv(text.as_bytes(), &cfg, "x").unwrap();
        let s = log.schema();
        assert_eq!(names(&s.case_attributes), ["case_id"]);
        assert_eq!(names(&s.event_attributes), ["event_name", "end_time", "cost", "ok"]);
        assert_eq!(s.event_attributes[2].ty, ScalarType::Number);
        assert_eq!(s.event_attributes[3].ty, ScalarType::Boolean);
        assert_eq!(log.event_column(1).get(0), Value::Timestamp(1_675_080_000_000));
        assert_eq!(log.event_column(1).get(1), Value::Timestamp(1_675_083_600_000));
        assert_eq!(log.event_column(2).get(1), Value::Null);
    }

    #[test]
    fn nan_is_never_a_number() {
        let text = "case_id,event_name,end_time,x\n1,a,1,NaN\n1,b,2,3\n";
        let log = ingest_csv(text.as_bytes(), &CsvIngestConfig::default(), "x").unwrap();
        assert_eq!(log.schema().event_attributes[2].ty, ScalarType::String);
        let cfg = CsvIngestConfig::default().with_type("x", ScalarType::Number);
        let err = ingest_csv(text.as_bytes(), &cfg, "x").unwrap_err();
        assert_eq!(err.code(), "InvalidValue");
    }

    #[test]
    fn ragged_rows_are_malformed() {
        let text = "case_id,event_name,end_time\n1,a\n";
        let err = ingest_csv(text.as_bytes(), &CsvIngestConfig::default(), "x").unwrap_err();
        assert_eq!(err.code(), "MalformedCsv");
    }
}
