use std::fmt;
use std::str::FromStr;

use signal_core::ResultTable;

/// How result tables are printed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    #[default]
    Table,
    Csv,
    Json,
}

impl OutputFormat {
    /// Rendered table, always ending in a newline.
    pub fn render(self, table: &ResultTable) -> String {
        let mut out = match self {
            OutputFormat::Table => table.to_text(),
            OutputFormat::Csv => table.to_csv(b','),
            OutputFormat::Json => table.to_json(),
        };
        if !out.ends_with('\n') {
            out.push('\n');
        }
        out
    }
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "table" => Ok(OutputFormat::Table),
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format '{other}' (expected table, csv or json)")),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Table => "table",
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}
