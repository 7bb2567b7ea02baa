//! End-to-end query pipeline over a catalog.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use crate::analyzer::{self, LogicalPlan};
use crate::error::{AnalyzeError, AnalyzeErrorKind, Error, ExecError};
use crate::exec::{self, ExecOptions, ExecStats, PhysicalPlan};
use crate::parser::{self, Source};
use crate::result::ResultTable;
use crate::store::{Catalog, SharedLog};

#[derive(Clone, Debug)]
pub struct EngineOptions {
    pub exec: ExecOptions,
    /// Apply the rewrite rules; turning this off runs the plan exactly as
    /// analyzed, reading every column.
    pub optimize: bool,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions { exec: ExecOptions::default(), optimize: true }
    }
}

/// Result of a query together with how it was run.
#[derive(Debug)]
pub struct QueryOutput {
    pub table: ResultTable,
    pub stats: ExecStats,
    pub plan: PhysicalPlan,
}

#[derive(Clone, Debug, Default)]
pub struct Engine {
    catalog: Arc<Catalog>,
    options: EngineOptions,
}

impl Engine {
    pub fn new(catalog: Arc<Catalog>) -> Engine {
        Engine { catalog, options: EngineOptions::default() }
    }

    pub fn with_options(catalog: Arc<Catalog>, options: EngineOptions) -> Engine {
        Engine { catalog, options }
    }

    pub fn catalog(&self) -> &Arc<Catalog> {
        &self.catalog
    }

    pub fn options(&self) -> &EngineOptions {
        &self.options
    }

    /// Runs one query. `current_log` binds `THIS_PROCESS`.
    pub fn query(&self, text: &str, current_log: Option<&str>) -> Result<ResultTable, Error> {
        self.run(text, current_log, self.options.optimize).map(|o| o.table)
    }

    pub fn run(&self, text: &str, current_log: Option<&str>, optimize: bool) -> Result<QueryOutput, Error> {
        let plan = self.plan(text, current_log, optimize)?;
        let (table, stats) = run_isolated(&plan, &self.options.exec)?;
        Ok(QueryOutput { table, stats, plan })
    }

    /// Parses, analyzes, optionally optimizes and binds a query to a fresh
    /// snapshot of its log.
    pub fn plan(&self, text: &str, current_log: Option<&str>, optimize: bool) -> Result<PhysicalPlan, Error> {
        let ast = parser::parse(text)?;
        let source = ast
            .from
            .as_ref()
            .ok_or_else(|| AnalyzeError::new(AnalyzeErrorKind::UnknownLog, ast.span, "query has no FROM clause"))?;
        let (log_id, log) = self.resolve(source.base(), current_log)?;
        let guard = log.read().expect("log lock poisoned");
        let mut logical: LogicalPlan = analyzer::analyze(&ast, &log_id, guard.schema())?;
        if optimize {
            logical = exec::optimize(logical, guard.schema());
        }
        let snapshot = guard.snapshot_indices(logical.scan_columns());
        drop(guard);
        Ok(exec::build_physical(logical, snapshot)?)
    }

    fn resolve(&self, source: &Source, current_log: Option<&str>) -> Result<(String, SharedLog), Error> {
        let (name, quoted, span) = match source {
            Source::Named { name, quoted, span } => (name.as_str(), *quoted, *span),
            Source::ThisProcess(span) => match current_log {
                Some(id) => (id, true, *span),
                None => {
                    return Err(AnalyzeError::new(
                        AnalyzeErrorKind::NoCurrentProcess,
                        *span,
                        "THIS_PROCESS used but no log is in scope",
                    )
                    .into())
                }
            },
            Source::Flatten(inner) => return self.resolve(inner, current_log),
        };
        if let Ok(log) = self.catalog.get(name) {
            return Ok((name.to_string(), log));
        }
        if !quoted {
            if let Some(info) = self.catalog.list().into_iter().find(|i| i.log_id.eq_ignore_ascii_case(name)) {
                if let Ok(log) = self.catalog.get(&info.log_id) {
                    return Ok((info.log_id, log));
                }
            }
        }
        Err(AnalyzeError::new(AnalyzeErrorKind::UnknownLog, span, format!("unknown log '{name}'")).into())
    }
}

/// Executes on a dedicated worker thread. A panic in the executor becomes an
/// `EvaluationError` instead of unwinding into the caller.
pub fn run_isolated(plan: &PhysicalPlan, options: &ExecOptions) -> Result<(ResultTable, ExecStats), ExecError> {
    std::thread::scope(|scope| {
        let worker = std::thread::Builder::new()
            .name("signal-query".into())
            .spawn_scoped(scope, || catch_unwind(AssertUnwindSafe(|| exec::execute(plan, options))));
        let joined = match worker {
            Ok(handle) => handle.join().unwrap_or_else(Err),
            Err(e) => return Err(ExecError::eval("Executor", format!("cannot start worker: {e}"))),
        };
        match joined {
            Ok(result) => result,
            Err(payload) => {
                let msg = payload
                    .downcast_ref::<&str>()
                    .map(|s| s.to_string())
                    .or_else(|| payload.downcast_ref::<String>().cloned())
                    .unwrap_or_else(|| "unknown panic".into());
                Err(ExecError::eval("Executor", format!("internal error: {msg}")))
            }
        }
    })
}
