//! An in-memory columnar query engine for process-mining event logs.
//!
//! Event logs are stored as a table of cases, each with a nested,
//! end-time-ordered table of events. Queries use an SQL subset extended with
//! event-level subqueries, `FIRST`/`LAST` aggregations and row pattern
//! matching (`BEHAVIOUR ... AS name`, `MATCHES (...)`) over each case's
//! event sequence.

pub mod analyzer;
pub mod engine;
pub mod error;
pub mod exec;
pub mod ingest;
pub mod parser;
pub mod pattern;
pub mod result;
pub mod store;
pub mod types;

pub use engine::{Engine, EngineOptions, QueryOutput};
pub use error::{Diagnostic, Error, Span};
pub use result::{ResultColumn, ResultTable};
pub use types::{Level, ScalarType, Value};
