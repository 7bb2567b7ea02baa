//! Interactive REPL and batch script execution.

use std::io::{self, BufRead, Write};

use signal_core::error::{ParseErrorKind, StoreError};
use signal_core::parser::{split_statements, tokenize, TokenKind};
use signal_core::{Engine, Error, Level, ResultColumn, ResultTable, ScalarType, Span, Value};

use crate::format::OutputFormat;

/// Per-user state of a REPL or batch run.
#[derive(Clone, Debug)]
pub struct Session {
    pub engine: Engine,
    /// Binding for `THIS_PROCESS`.
    pub current_log: Option<String>,
    pub format: OutputFormat,
}

/// What a meta-command asks the loop to do next.
#[derive(Debug, PartialEq, Eq)]
enum Flow {
    Continue,
    Quit,
}

const HELP: &str = "\
Statements end with ';'. Meta-commands:
  \\open <log>      bind THIS_PROCESS to a log
  \\logs            list loaded logs
  \\schema [log]    show the columns of a log
  \\format <fmt>    table, csv or json
  \\quit            leave
";

impl Session {
    pub fn new(engine: Engine) -> Session {
        Session { engine, current_log: None, format: OutputFormat::Table }
    }

    /// Runs every statement of `text`, printing results to `out` and
    /// diagnostics to `err`. With `stop_on_error` the first failure ends the
    /// run. Returns whether all statements succeeded.
    pub fn run_script(
        &self,
        text: &str,
        stop_on_error: bool,
        out: &mut dyn Write,
        err: &mut dyn Write,
    ) -> io::Result<bool> {
        let ranges = match split_statements(text) {
            Ok(r) => r,
            Err(e) => {
                writeln!(err, "{}", Error::from(e).diagnostic().render(text))?;
                return Ok(false);
            }
        };
        let mut ok = true;
        let mut first = true;
        for range in ranges {
            let stmt = &text[range.clone()];
            match self.engine.query(stmt, self.current_log.as_deref()) {
                Ok(table) => {
                    if !first {
                        writeln!(out)?;
                    }
                    first = false;
                    out.write_all(self.format.render(&table).as_bytes())?;
                }
                Err(e) => {
                    let mut diag = e.diagnostic();
                    diag.span = diag.span.map(|s| Span::new(s.start + range.start, s.end + range.start));
                    writeln!(err, "{}", diag.render(text))?;
                    ok = false;
                    if stop_on_error {
                        break;
                    }
                }
            }
        }
        out.flush()?;
        Ok(ok)
    }

    fn meta(&mut self, line: &str, out: &mut dyn Write, err: &mut dyn Write) -> io::Result<Flow> {
        let line = line.trim().trim_end_matches(';').trim_end();
        let mut parts = line.splitn(2, char::is_whitespace);
        let cmd = parts.next().unwrap_or_default();
        let arg = parts.next().map(str::trim).filter(|a| !a.is_empty());
        match (cmd, arg) {
            ("\\q" | "\\quit" | "\\exit", _) => return Ok(Flow::Quit),
            ("\\h" | "\\help" | "\\?", _) => out.write_all(HELP.as_bytes())?,
            ("\\open", Some(name)) => match self.find_log(name) {
                Some(id) => {
                    writeln!(out, "current log: {id}")?;
                    self.current_log = Some(id);
                }
                None => report(err, &StoreError::UnknownLog(name.to_string()).into())?,
            },
            ("\\logs", None) => out.write_all(self.format.render(&self.logs_table()).as_bytes())?,
            ("\\schema", arg) => {
                let id = match arg {
                    Some(name) => self.find_log(name),
                    None => self.current_log.clone(),
                };
                match id.map(|id| self.schema_table(&id)) {
                    Some(Ok(table)) => out.write_all(self.format.render(&table).as_bytes())?,
                    Some(Err(e)) => report(err, &e)?,
                    None if arg.is_none() => {
                        writeln!(err, "no current log; use \\open <log> or \\schema <log>")?
                    }
                    None => report(err, &StoreError::UnknownLog(arg.unwrap_or_default().into()).into())?,
                }
            }
            ("\\format", Some(name)) => match name.parse() {
                Ok(f) => self.format = f,
                Err(msg) => writeln!(err, "{msg}")?,
            },
            ("\\format", None) => writeln!(out, "{}", self.format)?,
            _ => writeln!(err, "unknown command '{line}'; try \\help")?,
        }
        Ok(Flow::Continue)
    }

    fn find_log(&self, name: &str) -> Option<String> {
        let catalog = self.engine.catalog();
        if catalog.contains(name) {
            return Some(name.to_string());
        }
        catalog.list().into_iter().map(|i| i.log_id).find(|id| id.eq_ignore_ascii_case(name))
    }

    fn logs_table(&self) -> ResultTable {
        let rows = self
            .engine
            .catalog()
            .list()
            .into_iter()
            .map(|i| vec![Value::string(&i.log_id), Value::Number(i.cases as f64), Value::Number(i.events as f64)])
            .collect();
        ResultTable {
            columns: vec![
                ResultColumn::new("log_id", ScalarType::String),
                ResultColumn::new("cases", ScalarType::Number),
                ResultColumn::new("events", ScalarType::Number),
            ],
            rows,
        }
    }

    fn schema_table(&self, log_id: &str) -> Result<ResultTable, Error> {
        let log = self.engine.catalog().get(log_id)?;
        let log = log.read().expect("log lock poisoned");
        let mut rows = Vec::new();
        for level in [Level::Case, Level::Event] {
            for attr in log.schema().attributes(level) {
                rows.push(vec![
                    Value::string(level.to_string()),
                    Value::string(&attr.name),
                    Value::string(attr.ty.to_string()),
                ]);
            }
        }
        Ok(ResultTable {
            columns: vec![
                ResultColumn::new("level", ScalarType::String),
                ResultColumn::new("name", ScalarType::String),
                ResultColumn::new("type", ScalarType::String),
            ],
            rows,
        })
    }
}

fn report(err: &mut dyn Write, e: &Error) -> io::Result<()> {
    writeln!(err, "{}", e.diagnostic().render(""))
}

/// Whether the buffered input ends a statement: its last token is `;`.
/// Input that cannot be tokenized counts as complete so the error is shown,
/// except an open string literal, which may continue on the next line.
fn is_complete(buffer: &str) -> bool {
    match tokenize(buffer) {
        Ok(tokens) => tokens
            .iter()
            .rev()
            .find(|t| t.kind != TokenKind::Eof)
            .is_some_and(|t| t.kind == TokenKind::Semicolon),
        Err(e) => e.kind != ParseErrorKind::UnterminatedString,
    }
}

/// Reads statements and meta-commands from `input` until EOF or `\quit`.
/// Errors are printed to `err` and the loop goes on. With `prompt` set,
/// prompts are written to `out`.
pub fn repl_loop(
    session: &mut Session,
    input: &mut dyn BufRead,
    out: &mut dyn Write,
    err: &mut dyn Write,
    prompt: bool,
) -> io::Result<i32> {
    let mut buffer = String::new();
    let mut line = String::new();
    loop {
        if prompt {
            write!(out, "{}", if buffer.is_empty() { "signal> " } else { "   ...> " })?;
            out.flush()?;
        }
        line.clear();
        if input.read_line(&mut line)? == 0 {
            break;
        }
        if buffer.trim().is_empty() && line.trim_start().starts_with('\\') {
            buffer.clear();
            if session.meta(&line, out, err)? == Flow::Quit {
                return Ok(0);
            }
            continue;
        }
        buffer.push_str(&line);
        if !buffer.trim().is_empty() && is_complete(&buffer) {
            session.run_script(&buffer, false, out, err)?;
            buffer.clear();
        }
    }
    if !buffer.trim().is_empty() {
        session.run_script(&buffer, false, out, err)?;
    }
    Ok(0)
}

/// Runs a script file's statements in order. Exit code 0 iff all succeed;
/// the first failure stops the run.
pub fn run_batch(session: &Session, text: &str, out: &mut dyn Write, err: &mut dyn Write) -> io::Result<i32> {
    Ok(if session.run_script(text, true, out, err)? { 0 } else { 1 })
}
