use std::collections::BTreeMap;
use std::str::FromStr;

use serde_json::Value as Json;

use crate::error::IngestError;
use crate::types::{Level, ScalarType};

/// What a source column means to the store.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColumnRole {
    CaseId,
    EventName,
    EndTime,
    StartTime,
    Attribute,
}

impl FromStr for ColumnRole {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "case_id" => Ok(ColumnRole::CaseId),
            "event_name" => Ok(ColumnRole::EventName),
            "end_time" => Ok(ColumnRole::EndTime),
            "start_time" => Ok(ColumnRole::StartTime),
            "attribute" => Ok(ColumnRole::Attribute),
            other => Err(format!("unknown column role '{other}'")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum TimestampFormat {
    /// Integer milliseconds since the Unix epoch.
    #[default]
    EpochMillis,
    /// RFC 3339 / ISO-8601 date-times; values without an offset are UTC.
    Iso8601,
    /// A chrono `strftime`-style pattern; values without an offset are UTC.
    Pattern(String),
}

impl FromStr for TimestampFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "epoch_millis" => Ok(TimestampFormat::EpochMillis),
            "iso8601" | "rfc3339" => Ok(TimestampFormat::Iso8601),
            "" => Err("empty timestamp format".into()),
            pattern => Ok(TimestampFormat::Pattern(pattern.to_string())),
        }
    }
}

/// How to map a CSV/TSV file onto a log.
///
/// Columns without an explicit role take the role matching their header
/// name (`case_id`, `event_name`, `end_time`, `start_time`), otherwise they
/// are plain attributes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CsvIngestConfig {
    pub delimiter: u8,
    pub column_roles: BTreeMap<String, ColumnRole>,
    pub timestamp_format: TimestampFormat,
    pub level_overrides: BTreeMap<String, Level>,
    pub type_overrides: BTreeMap<String, ScalarType>,
}

impl Default for CsvIngestConfig {
    fn default() -> Self {
        CsvIngestConfig {
            delimiter: b',',
            column_roles: BTreeMap::new(),
            timestamp_format: TimestampFormat::EpochMillis,
            level_overrides: BTreeMap::new(),
            type_overrides: BTreeMap::new(),
        }
    }
}

impl CsvIngestConfig {
    pub fn tsv() -> CsvIngestConfig {
        CsvIngestConfig { delimiter: b'\t', ..CsvIngestConfig::default() }
    }

    pub fn with_role(mut self, column: &str, role: ColumnRole) -> Self {
        self.column_roles.insert(column.to_string(), role);
        self
    }

    pub fn with_level(mut self, column: &str, level: Level) -> Self {
        self.level_overrides.insert(column.to_string(), level);
        self
    }

    pub fn with_type(mut self, column: &str, ty: ScalarType) -> Self {
        self.type_overrides.insert(column.to_string(), ty);
        self
    }

    /// Parses the flat key-value wire form, e.g.
    ///
    /// ```json
    /// {"format": "tsv", "timestamp_format": "iso8601",
    ///  "role.CaseNr": "case_id", "level.status": "event", "type.cost": "Number"}
    /// ```
    ///
    /// `format` (`csv`/`tsv`) picks the default delimiter; `delimiter`
    /// overrides it with a single character.
    pub fn from_json(text: &str) -> Result<CsvIngestConfig, IngestError> {
        let invalid = |m: String| IngestError::InvalidConfig(m);
        let doc: Json = serde_json::from_str(text).map_err(|e| invalid(e.to_string()))?;
        let Json::Object(map) = doc else {
            return Err(invalid("config must be a JSON object".into()));
        };
        let mut cfg = CsvIngestConfig::default();
        let mut delimiter = None;
        for (key, value) in &map {
            let Json::String(value) = value else {
                return Err(invalid(format!("value of '{key}' must be a string")));
            };
            if let Some(col) = key.strip_prefix("role.") {
                cfg.column_roles.insert(col.to_string(), value.parse().map_err(invalid)?);
            } else if let Some(col) = key.strip_prefix("level.") {
                cfg.level_overrides.insert(col.to_string(), value.parse().map_err(invalid)?);
            } else if let Some(col) = key.strip_prefix("type.") {
                cfg.type_overrides.insert(col.to_string(), value.parse().map_err(invalid)?);
            } else {
                match key.as_str() {
                    "format" => match value.to_ascii_lowercase().as_str() {
                        "csv" => {}
                        "tsv" => cfg.delimiter = b'\t',
                        other => return Err(invalid(format!("unknown format '{other}'"))),
                    },
                    "delimiter" => {
                        let d = match value.as_str() {
                            "\\t" | "tab" => b'\t',
                            v if v.len() == 1 => v.as_bytes()[0],
                            v => return Err(invalid(format!("delimiter '{v}' is not one byte"))),
                        };
                        delimiter = Some(d);
                    }
                    "timestamp_format" => {
                        cfg.timestamp_format = value.parse().map_err(invalid)?;
                    }
                    other => return Err(invalid(format!("unknown key '{other}'"))),
                }
            }
        }
        if let Some(d) = delimiter {
            cfg.delimiter = d;
        }
        Ok(cfg)
    }
}
