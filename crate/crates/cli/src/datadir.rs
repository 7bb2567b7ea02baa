//! Loading logs from files and the on-disk data directory.
//!
//! A data directory holds `<logId>.csv`, `<logId>.tsv` or `<logId>.xes`,
//! each with an optional `<logId>.config.json` ingest config next to it.

use std::fs;
use std::io::{BufReader, Cursor};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use signal_core::error::IngestError;
use signal_core::ingest::{ingest_csv, ingest_xes, CsvIngestConfig};
use signal_core::store::{Catalog, EventLog};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SourceFormat {
    Csv,
    Tsv,
    Xes,
}

impl SourceFormat {
    pub fn from_path(path: &Path) -> Option<SourceFormat> {
        SourceFormat::from_extension(path.extension()?.to_str()?)
    }

    pub fn from_extension(ext: &str) -> Option<SourceFormat> {
        match ext.to_ascii_lowercase().as_str() {
            "csv" => Some(SourceFormat::Csv),
            "tsv" | "tab" => Some(SourceFormat::Tsv),
            "xes" => Some(SourceFormat::Xes),
            _ => None,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            SourceFormat::Csv => "csv",
            SourceFormat::Tsv => "tsv",
            SourceFormat::Xes => "xes",
        }
    }
}

/// Delimited-text config for a file of the given format. A `.tsv` file is
/// tab separated unless the config names a format or delimiter itself.
pub fn csv_config(format: SourceFormat, config: Option<&str>) -> Result<CsvIngestConfig, IngestError> {
    let Some(text) = config else {
        return Ok(match format {
            SourceFormat::Tsv => CsvIngestConfig::tsv(),
            _ => CsvIngestConfig::default(),
        });
    };
    let mut cfg = CsvIngestConfig::from_json(text)?;
    if format == SourceFormat::Tsv {
        let doc: serde_json::Value =
            serde_json::from_str(text).map_err(|e| IngestError::InvalidConfig(e.to_string()))?;
        if doc.get("format").is_none() && doc.get("delimiter").is_none() {
            cfg.delimiter = b'\t';
        }
    }
    Ok(cfg)
}

/// Parses an in-memory file into a log. XES ignores the config.
pub fn load_bytes(
    bytes: &[u8],
    format: SourceFormat,
    config: Option<&str>,
    log_id: &str,
) -> Result<EventLog, IngestError> {
    match format {
        SourceFormat::Xes => ingest_xes(Cursor::new(bytes), log_id),
        _ => ingest_csv(bytes, &csv_config(format, config)?, log_id),
    }
}

/// Parses a file on disk, choosing the format from its extension.
pub fn load_file(path: &Path, config: Option<&str>, log_id: &str) -> anyhow::Result<EventLog> {
    let format = SourceFormat::from_path(path)
        .with_context(|| format!("{}: expected a .csv, .tsv or .xes file", path.display()))?;
    let file = fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let log = match format {
        SourceFormat::Xes => ingest_xes(BufReader::new(file), log_id),
        _ => ingest_csv(file, &csv_config(format, config)?, log_id),
    };
    log.with_context(|| format!("cannot ingest {}", path.display()))
}

fn config_path(dir: &Path, log_id: &str) -> PathBuf {
    dir.join(format!("{log_id}.config.json"))
}

/// Loads every log file in `dir` into the catalog. Returns the loaded ids in
/// file-name order.
pub fn load_dir(catalog: &Catalog, dir: &Path) -> anyhow::Result<Vec<String>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("cannot read data directory {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && SourceFormat::from_path(p).is_some())
        .collect();
    paths.sort();
    let mut loaded = Vec::new();
    for path in paths {
        let Some(log_id) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        let config_file = config_path(dir, log_id);
        let config = match fs::read_to_string(&config_file) {
            Ok(text) => Some(text),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
            Err(e) => return Err(e).with_context(|| format!("cannot read {}", config_file.display())),
        };
        let log = load_file(&path, config.as_deref(), log_id)?;
        catalog.register(log)?;
        loaded.push(log_id.to_string());
    }
    Ok(loaded)
}

/// Writes a log's source file and config into `dir` so later starts load it.
pub fn persist(
    dir: &Path,
    log_id: &str,
    format: SourceFormat,
    bytes: &[u8],
    config: Option<&str>,
) -> anyhow::Result<()> {
    check_log_id(log_id)?;
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let target = dir.join(format!("{log_id}.{}", format.extension()));
    fs::write(&target, bytes).with_context(|| format!("cannot write {}", target.display()))?;
    let config_file = config_path(dir, log_id);
    match config {
        Some(text) => fs::write(&config_file, text)
            .with_context(|| format!("cannot write {}", config_file.display()))?,
        None if config_file.exists() => fs::remove_file(&config_file)?,
        None => {}
    }
    Ok(())
}

/// Deletes a log's files from `dir`, if any.
pub fn forget(dir: &Path, log_id: &str) -> anyhow::Result<()> {
    check_log_id(log_id)?;
    for ext in ["csv", "tsv", "xes", "config.json"] {
        let path = dir.join(format!("{log_id}.{ext}"));
        if path.exists() {
            fs::remove_file(&path).with_context(|| format!("cannot remove {}", path.display()))?;
        }
    }
    Ok(())
}

/// Log ids become file names, so path separators and dots are refused.
pub fn check_log_id(log_id: &str) -> anyhow::Result<()> {
    let ok = !log_id.is_empty()
        && log_id.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '-');
    if !ok {
        bail!("invalid log id '{log_id}': use letters, digits, '_' or '-'");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "case_id,event_name,end_time\nc1,a,1\nc1,b,2\n";

    #[test]
    fn tsv_defaults_to_tabs() {
        assert_eq!(csv_config(SourceFormat::Tsv, None).unwrap().delimiter, b'\t');
        assert_eq!(csv_config(SourceFormat::Tsv, Some("{}")).unwrap().delimiter, b'\t');
        let explicit = csv_config(SourceFormat::Tsv, Some(r#"{"format":"csv"}"#)).unwrap();
        assert_eq!(explicit.delimiter, b',');
    }

    #[test]
    fn round_trips_through_a_directory() {
        let dir = tempfile::tempdir().unwrap();
        persist(dir.path(), "demo", SourceFormat::Csv, CSV.as_bytes(), None).unwrap();
        fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
        let catalog = Catalog::new();
        assert_eq!(load_dir(&catalog, dir.path()).unwrap(), vec!["demo"]);
        let info = &catalog.list()[0];
        assert_eq!((info.cases, info.events), (1, 2));
        forget(dir.path(), "demo").unwrap();
        assert!(load_dir(&Catalog::new(), dir.path()).unwrap().is_empty());
    }

    #[test]
    fn rejects_path_like_ids() {
        assert!(check_log_id("../x").is_err());
        assert!(check_log_id("a.b").is_err());
        assert!(check_log_id("support_2").is_ok());
    }
}
