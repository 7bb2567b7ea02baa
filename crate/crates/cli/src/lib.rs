//! Command-line and HTTP front ends for the signal query engine.

pub mod datadir;
pub mod format;
pub mod http;
pub mod session;

pub use format::OutputFormat;
pub use session::{repl_loop, run_batch, Session};
