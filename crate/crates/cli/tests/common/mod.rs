#![allow(dead_code)]

use std::sync::Arc;

use signal_core::ingest::{ingest_csv, CsvIngestConfig};
use signal_core::store::Catalog;
use signal_core::Engine;

pub const SUPPORT_LOG: &str = "case_id,customer_id,final_status,event_name,end_time,status
1001,C2001,done,Open ticket,1675086864052,none
1001,C2001,done,Assign ticket,1675160180724,open
1001,C2001,done,Close ticket,1675220315296,done
1002,C2002,blocked,Open ticket,1675147138009,none
1002,C2002,blocked,Assign ticket,1675213914098,open
1002,C2002,blocked,Close ticket,1675282027657,blocked
1002,C2002,blocked,Open ticket,1675414104525,blocked
";

pub const REOPENED: &str =
    "SELECT case_id\nFROM THIS_PROCESS\nWHERE event_name MATCHES ('Close ticket' ~> 'Open Ticket')";
pub const CLOSED_BLOCKED: &str =
    "SELECT case_id\nFROM THIS_PROCESS\nWHERE (event_name = 'Close ticket' AND \"status\" = 'blocked')";
pub const CLOSED_WHILE_BLOCKED: &str = "SELECT case_id\nFROM THIS_PROCESS\nWHERE BEHAVIOUR\n(event_name = 'Close ticket' AND \"status\" = 'blocked')\nas closed_while_blocked\nMATCHES(closed_while_blocked ~> 'Open ticket')";
pub const CYCLE_TIME: &str = "SELECT AVG((SELECT LAST(end_time) - FIRST(end_time))) FROM THIS_PROCESS";

pub fn support_engine() -> Engine {
    let catalog = Arc::new(Catalog::new());
    let log = ingest_csv(SUPPORT_LOG.as_bytes(), &CsvIngestConfig::default(), "support").unwrap();
    catalog.register(log).unwrap();
    Engine::new(catalog)
}

/// `multipart/form-data` body with the given text fields and one file.
pub fn multipart(boundary: &str, fields: &[(&str, &str)], file: Option<(&str, &[u8])>) -> Vec<u8> {
    let mut body = Vec::new();
    for (name, value) in fields {
        body.extend_from_slice(
            format!("--{boundary}\r\nContent-Disposition: form-data; name=\"{name}\"\r\n\r\n{value}\r\n").as_bytes(),
        );
    }
    if let Some((file_name, bytes)) = file {
        body.extend_from_slice(
            format!(
                "--{boundary}\r\nContent-Disposition: form-data; name=\"file\"; filename=\"{file_name}\"\r\nContent-Type: application/octet-stream\r\n\r\n"
            )
            .as_bytes(),
        );
        body.extend_from_slice(bytes);
        body.extend_from_slice(b"\r\n");
    }
    body.extend_from_slice(format!("--{boundary}--\r\n").as_bytes());
    body
}
