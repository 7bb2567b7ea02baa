//! Columnar event-log storage: schemas, logs, snapshots and the catalog.

mod catalog;
mod column;
mod log;
mod schema;
mod snapshot;

pub use catalog::{Catalog, LogInfo, SharedLog};
pub use column::{Column, Dictionary, StringColumn};
pub use log::EventLog;
pub use schema::{Attribute, Schema, CASE_ID, END_TIME, EVENT_NAME, START_TIME};
pub use snapshot::Snapshot;
