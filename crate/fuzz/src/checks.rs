//! Properties checked on every fuzz input. Shared with the seed replay
//! test in `crates/core/tests/fuzz_seeds.rs`.

use std::io::Cursor;
use std::sync::{Arc, OnceLock};

use signal_core::exec::ExecOptions;
use signal_core::ingest::{ingest_csv, ingest_xes, CsvIngestConfig, TimestampFormat};
use signal_core::parser::{parse, parse_pattern, split_statements, tokenize, TokenKind};
use signal_core::store::{Catalog, EventLog};
use signal_core::{Engine, EngineOptions, Level};

const SUPPORT_LOG: &str = "case_id,customer_id,final_status,event_name,end_time,status
1001,C2001,done,Open ticket,1675086864052,none
1001,C2001,done,Assign ticket,1675160180724,open
1001,C2001,done,Close ticket,1675220315296,done
1002,C2002,blocked,Open ticket,1675147138009,none
1002,C2002,blocked,Assign ticket,1675213914098,open
1002,C2002,blocked,Close ticket,1675282027657,blocked
1002,C2002,blocked,Open ticket,1675414104525,blocked
";

pub fn tokenize_input(text: &str) {
    let Ok(tokens) = tokenize(text) else { return };
    assert_eq!(tokens.last().map(|t| &t.kind), Some(&TokenKind::Eof));
    let mut prev = 0;
    for t in &tokens {
        assert!(t.span.start >= prev && t.span.start <= t.span.end && t.span.end <= text.len());
        assert!(text.is_char_boundary(t.span.start) && text.is_char_boundary(t.span.end));
        prev = t.span.end;
    }
}

/// Accepted queries print to text that parses back to the same tree.
pub fn parse_query_input(text: &str) {
    let Ok(ast) = parse(text) else { return };
    let printed = ast.to_string();
    let again = parse(&printed).unwrap_or_else(|e| panic!("{printed:?} does not reparse: {e}"));
    assert_eq!(ast, again, "{printed}");
}

pub fn parse_pattern_input(text: &str) {
    let Ok(tokens) = tokenize(text) else { return };
    let Ok(pattern) = parse_pattern(&tokens) else { return };
    let printed = pattern.to_string();
    let again = parse_pattern(&tokenize(&printed).expect("printed pattern tokenizes"))
        .unwrap_or_else(|e| panic!("{printed:?} does not reparse: {e}"));
    assert_eq!(pattern, again, "{printed}");
}

pub fn split_statements_input(text: &str) {
    let Ok(ranges) = split_statements(text) else { return };
    let mut prev = 0;
    for r in ranges {
        assert!(prev <= r.start && r.start < r.end && r.end <= text.len());
        assert!(!text[r.clone()].trim().is_empty());
        prev = r.end;
    }
}

fn engine() -> &'static Engine {
    static ENGINE: OnceLock<Engine> = OnceLock::new();
    ENGINE.get_or_init(|| {
        let catalog = Arc::new(Catalog::new());
        let log = ingest_csv(SUPPORT_LOG.as_bytes(), &CsvIngestConfig::default(), "support").expect("fixture");
        catalog.register(log).expect("fresh catalog");
        let options = EngineOptions { exec: ExecOptions { max_cells: 100_000 }, ..EngineOptions::default() };
        Engine::with_options(catalog, options)
    })
}

/// Any text runs to a result or an error; results are well typed and
/// errors render against the source.
pub fn run_query_input(text: &str) {
    match engine().query(text, Some("support")) {
        Ok(table) => assert_eq!(table.type_violation(), None),
        Err(e) => {
            let _ = e.diagnostic().render(text);
        }
    }
}

/// Structural invariants, then flatten and re-ingest with every level and
/// type pinned. A name used at both levels gives a flat table two equal
/// headers, so such logs skip the round trip.
fn check_log(log: &EventLog) {
    let offsets = log.offsets();
    assert_eq!(offsets.first(), Some(&0));
    assert!(offsets.windows(2).all(|w| w[0] < w[1]), "every case has events");
    assert_eq!(*offsets.last().unwrap(), log.event_count());

    let schema = log.schema();
    let flat = log.flatten();
    assert_eq!(flat.rows.len(), log.event_count());
    let shared = schema
        .case_attributes
        .iter()
        .any(|a| schema.event_attributes.iter().any(|b| b.name.eq_ignore_ascii_case(&a.name)));
    if shared {
        return;
    }
    let mut config = CsvIngestConfig::default();
    for level in [Level::Case, Level::Event] {
        for a in schema.attributes(level) {
            config = config.with_level(&a.name, level).with_type(&a.name, a.ty);
        }
    }
    let csv = flat.to_csv(b',');
    let back = ingest_csv(csv.as_bytes(), &config, log.id()).unwrap_or_else(|e| panic!("re-ingest: {e}\n{csv}"));
    assert_eq!(back.schema(), schema);
    assert_eq!(back.flatten(), flat);
}

/// The first byte picks delimiter and timestamp format.
pub fn ingest_csv_input(data: &[u8]) {
    let Some((&mode, body)) = data.split_first() else { return };
    let mut config = if mode & 1 == 1 { CsvIngestConfig::tsv() } else { CsvIngestConfig::default() };
    if mode & 2 == 2 {
        config.timestamp_format = TimestampFormat::Iso8601;
    }
    if let Ok(log) = ingest_csv(body, &config, "fuzz") {
        check_log(&log);
    }
}

pub fn ingest_xes_input(data: &[u8]) {
    if let Ok(log) = ingest_xes(Cursor::new(data), "fuzz") {
        check_log(&log);
    }
}

pub fn ingest_config_input(text: &str) {
    if let Ok(config) = CsvIngestConfig::from_json(text) {
        let _ = ingest_csv(SUPPORT_LOG.as_bytes(), &config, "fuzz");
    }
}
