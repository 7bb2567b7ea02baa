//! Loading event logs from delimited text files and XES documents.

mod config;
mod csv;
mod levels;
mod xes;

pub use self::csv::ingest_csv;
pub use config::{ColumnRole, CsvIngestConfig, TimestampFormat};
pub use levels::{infer_attribute_levels, is_constant_per_case};
pub use xes::ingest_xes;

use chrono::{DateTime, NaiveDate, NaiveDateTime};

/// Parses a timestamp into epoch milliseconds.
pub fn parse_timestamp(raw: &str, format: &TimestampFormat) -> Option<i64> {
    let raw = raw.trim();
    match format {
        TimestampFormat::EpochMillis => raw.parse().ok(),
        TimestampFormat::Iso8601 => DateTime::parse_from_rfc3339(raw)
            .map(|d| d.timestamp_millis())
            .ok()
            .or_else(|| {
                ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"]
                    .iter()
                    .find_map(|p| NaiveDateTime::parse_from_str(raw, p).ok())
                    .map(|d| d.and_utc().timestamp_millis())
            })
            .or_else(|| {
                NaiveDate::parse_from_str(raw, "%Y-%m-%d")
                    .ok()
                    .and_then(|d| d.and_hms_opt(0, 0, 0))
                    .map(|d| d.and_utc().timestamp_millis())
            }),
        TimestampFormat::Pattern(p) => DateTime::parse_from_str(raw, p)
            .map(|d| d.timestamp_millis())
            .ok()
            .or_else(|| NaiveDateTime::parse_from_str(raw, p).ok().map(|d| d.and_utc().timestamp_millis()))
            .or_else(|| {
                NaiveDate::parse_from_str(raw, p)
                    .ok()
                    .and_then(|d| d.and_hms_opt(0, 0, 0))
                    .map(|d| d.and_utc().timestamp_millis())
            }),
    }
}
