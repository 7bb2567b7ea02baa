use std::collections::BTreeMap;
use std::sync::{Arc, RwLock};

use serde::Serialize;

use crate::error::StoreError;
use crate::store::log::EventLog;
use crate::store::schema::Schema;

pub type SharedLog = Arc<RwLock<EventLog>>;

/// Summary row for listing logs.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LogInfo {
    pub log_id: String,
    pub cases: usize,
    pub events: usize,
    pub schema: Schema,
}

/// In-process registry of event logs keyed by log id.
#[derive(Debug, Default)]
pub struct Catalog {
    logs: RwLock<BTreeMap<String, SharedLog>>,
}

impl Catalog {
    pub fn new() -> Catalog {
        Catalog::default()
    }

    /// Registers an empty log.
    pub fn create_log(&self, log_id: &str, schema: Schema) -> Result<SharedLog, StoreError> {
        self.register(EventLog::new(log_id, schema))
    }

    /// Registers a fully built log under its own id.
    pub fn register(&self, log: EventLog) -> Result<SharedLog, StoreError> {
        let mut logs = self.logs.write().expect("catalog lock poisoned");
        if logs.contains_key(log.id()) {
            return Err(StoreError::DuplicateLogId(log.id().to_string()));
        }
        let id = log.id().to_string();
        let shared = Arc::new(RwLock::new(log));
        logs.insert(id, shared.clone());
        Ok(shared)
    }

    pub fn get(&self, log_id: &str) -> Result<SharedLog, StoreError> {
        self.logs
            .read()
            .expect("catalog lock poisoned")
            .get(log_id)
            .cloned()
            .ok_or_else(|| StoreError::UnknownLog(log_id.to_string()))
    }

    pub fn contains(&self, log_id: &str) -> bool {
        self.logs.read().expect("catalog lock poisoned").contains_key(log_id)
    }

    pub fn remove(&self, log_id: &str) -> Result<(), StoreError> {
        self.logs
            .write()
            .expect("catalog lock poisoned")
            .remove(log_id)
            .map(|_| ())
            .ok_or_else(|| StoreError::UnknownLog(log_id.to_string()))
    }

    pub fn list(&self) -> Vec<LogInfo> {
        let logs = self.logs.read().expect("catalog lock poisoned");
        logs.iter()
            .map(|(id, log)| {
                let log = log.read().expect("log lock poisoned");
                LogInfo {
                    log_id: id.clone(),
                    cases: log.case_count(),
                    events: log.event_count(),
                    schema: log.schema().clone(),
                }
            })
            .collect()
    }
}
