//! Minimal XES import: traces become cases, events keep their typed
//! attributes. Only the concept and time extensions are interpreted.

use std::io::BufRead;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use crate::error::{IngestError, XesElement};
use crate::ingest::parse_timestamp;
use crate::ingest::TimestampFormat;
use crate::store::{Attribute, EventLog, Schema, CASE_ID, END_TIME, EVENT_NAME};
use crate::types::{ScalarType, Value};

const CONCEPT_NAME: &str = "concept:name";
const TIMESTAMP: &str = "time:timestamp";

#[derive(Clone, Copy, PartialEq)]
enum Ctx {
    Log,
    Trace,
    Event,
    Skip,
}

type Attrs = Vec<(String, Value)>;

#[derive(Default)]
struct Trace {
    attrs: Attrs,
    events: Vec<Attrs>,
}

fn malformed(e: impl std::fmt::Display) -> IngestError {
    IngestError::MalformedXml(e.to_string())
}

/// Parses one typed attribute element; `None` for element kinds that are
/// not imported (`id`, `list`, `container`, ...).
fn typed_attribute(e: &BytesStart<'_>) -> Result<Option<(String, Value)>, IngestError> {
    let kind = String::from_utf8_lossy(e.local_name().as_ref()).into_owned();
    if !matches!(kind.as_str(), "string" | "int" | "float" | "boolean" | "date") {
        return Ok(None);
    }
    let mut key = None;
    let mut value = None;
    for attr in e.attributes() {
        let attr = attr.map_err(malformed)?;
        let text = attr.unescape_value().map_err(malformed)?.into_owned();
        match attr.key.as_ref() {
            b"key" => key = Some(text),
            b"value" => value = Some(text),
            _ => {}
        }
    }
    let (Some(key), Some(raw)) = (key, value) else {
        return Err(malformed(format!("<{kind}> needs key and value attributes")));
    };
    let bad = || malformed(format!("invalid {kind} value '{raw}' for key '{key}'"));
    let v = match kind.as_str() {
        "string" => Value::string(&raw),
        "int" => Value::Number(raw.trim().parse::<i64>().map_err(|_| bad())? as f64),
        "float" => match raw.trim().parse::<f64>() {
            Ok(n) if !n.is_nan() => Value::Number(n),
            _ => return Err(bad()),
        },
        "boolean" => match raw.trim() {
            "true" => Value::Boolean(true),
            "false" => Value::Boolean(false),
            _ => return Err(bad()),
        },
        "date" => Value::Timestamp(parse_timestamp(&raw, &TimestampFormat::Iso8601).ok_or_else(bad)?),
        _ => unreachable!(),
    };
    Ok(Some((key, v)))
}

fn is_attribute_element(e: &BytesStart<'_>) -> bool {
    matches!(
        e.local_name().as_ref(),
        b"string" | b"int" | b"float" | b"boolean" | b"date" | b"id" | b"list" | b"container"
    )
}

fn parse_traces<R: BufRead>(input: R) -> Result<Vec<Trace>, IngestError> {
    let mut reader = Reader::from_reader(input);
    let mut buf = Vec::new();
    let mut stack: Vec<Ctx> = Vec::new();
    let mut traces: Vec<Trace> = Vec::new();
    let mut seen_log = false;
    loop {
        let event = reader.read_event_into(&mut buf).map_err(malformed)?;
        let (start, empty) = match &event {
            Event::Start(e) => (Some(e.to_owned()), false),
            Event::Empty(e) => (Some(e.to_owned()), true),
            Event::End(_) => {
                match stack.pop() {
                    Some(Ctx::Trace) | Some(Ctx::Event) | Some(Ctx::Log) | Some(Ctx::Skip) => {}
                    None => return Err(malformed("unbalanced end tag")),
                }
                (None, false)
            }
            Event::Eof => break,
            _ => (None, false),
        };
        let Some(e) = start else {
            buf.clear();
            continue;
        };
        let name = e.local_name();
        let pushed = match stack.last().copied() {
            None => {
                if name.as_ref() != b"log" || seen_log {
                    return Err(malformed("document root must be a single <log> element"));
                }
                seen_log = true;
                Ctx::Log
            }
            Some(Ctx::Log) if name.as_ref() == b"trace" => {
                traces.push(Trace::default());
                Ctx::Trace
            }
            Some(Ctx::Trace) if name.as_ref() == b"event" => {
                traces.last_mut().expect("inside a trace").events.push(Vec::new());
                Ctx::Event
            }
            Some(Ctx::Trace) if is_attribute_element(&e) => {
                if let Some(attr) = typed_attribute(&e)? {
                    traces.last_mut().expect("inside a trace").attrs.push(attr);
                }
                Ctx::Skip
            }
            Some(Ctx::Event) if is_attribute_element(&e) => {
                if let Some(attr) = typed_attribute(&e)? {
                    let trace = traces.last_mut().expect("inside a trace");
                    trace.events.last_mut().expect("inside an event").push(attr);
                }
                Ctx::Skip
            }
            _ => Ctx::Skip,
        };
        if !empty {
            stack.push(pushed);
        }
        buf.clear();
    }
    if !stack.is_empty() {
        return Err(malformed("unexpected end of document"));
    }
    if !seen_log {
        return Err(malformed("no <log> element"));
    }
    Ok(traces)
}

/// Registers `key` with type `ty` in a first-appearance ordered attribute list.
fn declare(attrs: &mut Vec<Attribute>, key: &str, v: &Value) -> Result<(), IngestError> {
    let Some(ty) = v.scalar_type() else { return Ok(()) };
    match attrs.iter().find(|a| a.name.eq_ignore_ascii_case(key)) {
        Some(a) if a.ty != ty => Err(IngestError::Store(crate::error::StoreError::TypeMismatch {
            column: key.to_string(),
            expected: a.ty,
            found: ty.to_string(),
        })),
        Some(_) => Ok(()),
        None => {
            attrs.push(Attribute::new(key, ty));
            Ok(())
        }
    }
}

fn get<'a>(attrs: &'a Attrs, key: &str) -> Option<&'a Value> {
    attrs.iter().find(|(k, _)| k == key).map(|(_, v)| v)
}

/// Reads an XES document into an event log.
///
/// The trace `concept:name` becomes `case_id`; per event `concept:name`
/// becomes `event_name` and `time:timestamp` becomes `end_time`. Other
/// string/int/float/boolean/date attributes are imported as
/// String/Number/Number/Boolean/Timestamp columns.
pub fn ingest_xes<R: BufRead>(input: R, log_id: &str) -> Result<EventLog, IngestError> {
    let traces = parse_traces(input)?;

    let mut case_attrs = vec![Attribute::new(CASE_ID, ScalarType::String)];
    let mut event_attrs = vec![
        Attribute::new(EVENT_NAME, ScalarType::String),
        Attribute::new(END_TIME, ScalarType::Timestamp),
    ];
    let mut case_ids = Vec::with_capacity(traces.len());
    for trace in &traces {
        let id = match get(&trace.attrs, CONCEPT_NAME) {
            Some(v) if !v.is_null() => v.to_string(),
            _ => return Err(IngestError::MissingConceptName(XesElement::Trace)),
        };
        for (k, v) in &trace.attrs {
            if k != CONCEPT_NAME {
                declare(&mut case_attrs, k, v)?;
            }
        }
        for event in &trace.events {
            match get(event, CONCEPT_NAME) {
                Some(Value::String(_)) => {}
                _ => return Err(IngestError::MissingConceptName(XesElement::Event)),
            }
            match get(event, TIMESTAMP) {
                Some(Value::Timestamp(_)) => {}
                _ => return Err(IngestError::MissingTimestamp { trace: id.clone() }),
            }
            for (k, v) in event {
                if k != CONCEPT_NAME && k != TIMESTAMP {
                    declare(&mut event_attrs, k, v)?;
                }
            }
        }
        case_ids.push(id);
    }

    let schema = Schema::new(case_attrs.clone(), event_attrs.clone())?;
    let mut log = EventLog::new(log_id, schema);
    for (trace, id) in traces.iter().zip(case_ids) {
        let mut case_row = vec![Value::Null; case_attrs.len()];
        case_row[0] = Value::string(id);
        for (k, v) in &trace.attrs {
            if let Some(i) = case_attrs.iter().skip(1).position(|a| a.name.eq_ignore_ascii_case(k)) {
                case_row[i + 1] = v.clone();
            }
        }
        let events = trace
            .events
            .iter()
            .map(|event| {
                let mut row = vec![Value::Null; event_attrs.len()];
                for (k, v) in event {
                    let idx = match k.as_str() {
                        CONCEPT_NAME => Some(0),
                        TIMESTAMP => Some(1),
                        _ => event_attrs.iter().skip(2).position(|a| a.name.eq_ignore_ascii_case(k)).map(|i| i + 2),
                    };
                    if let Some(i) = idx {
                        row[i] = v.clone();
                    }
                }
                row
            })
            .collect();
        log.append_case_rows(case_row, events)?;
    }
    Ok(log)
}
