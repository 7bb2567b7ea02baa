use std::io::{self, IsTerminal};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use signal_cli::datadir::{self, SourceFormat};
use signal_cli::http::{self, AppState};
use signal_cli::{repl_loop, run_batch, OutputFormat, Session};
use signal_core::store::Catalog;
use signal_core::Engine;

#[derive(Parser)]
#[command(name = "signal", version, about = "Query process-mining event logs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Interactive shell.
    Repl {
        /// Log bound to THIS_PROCESS at start.
        #[arg(long)]
        log: Option<String>,
        #[arg(long, env = "SIGNAL_DATA_DIR")]
        data: Option<PathBuf>,
    },
    /// Run the ';'-separated queries of a file.
    Run {
        file: PathBuf,
        #[arg(long)]
        log: String,
        #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
        format: OutputFormat,
        #[arg(long, env = "SIGNAL_DATA_DIR")]
        data: Option<PathBuf>,
    },
    /// Validate a CSV, TSV or XES file and add it to the data directory.
    Ingest {
        file: PathBuf,
        /// Ingest config as a JSON file path or inline JSON text.
        #[arg(long)]
        config: Option<String>,
        #[arg(long)]
        log: String,
        #[arg(long, env = "SIGNAL_DATA_DIR")]
        data: Option<PathBuf>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, env = "SIGNAL_DATA_DIR")]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = http::DEFAULT_MAX_UPLOAD_BYTES)]
        max_upload_bytes: usize,
    },
}

fn engine_for(data: Option<&Path>) -> anyhow::Result<Engine> {
    let catalog = Arc::new(Catalog::new());
    if let Some(dir) = data {
        if dir.exists() {
            let loaded = datadir::load_dir(&catalog, dir)?;
            tracing::info!(count = loaded.len(), dir = %dir.display(), "loaded logs");
        }
    }
    Ok(Engine::new(catalog))
}

fn read_config(arg: &str) -> anyhow::Result<String> {
    if arg.trim_start().starts_with('{') {
        return Ok(arg.to_string());
    }
    std::fs::read_to_string(arg).with_context(|| format!("cannot read config {arg}"))
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Repl { log, data } => {
            let mut session = Session::new(engine_for(data.as_deref())?);
            if let Some(id) = log {
                if !session.engine.catalog().contains(&id) {
                    bail!("unknown log '{id}'");
                }
                session.current_log = Some(id);
            }
            let interactive = io::stdin().is_terminal();
            let code = repl_loop(
                &mut session,
                &mut io::stdin().lock(),
                &mut io::stdout().lock(),
                &mut io::stderr().lock(),
                interactive,
            )?;
            Ok(code as u8)
        }
        Command::Run { file, log, format, data } => {
            let text = std::fs::read_to_string(&file).with_context(|| format!("cannot read {}", file.display()))?;
            let mut session = Session::new(engine_for(data.as_deref())?);
            session.current_log = Some(log);
            session.format = format;
            let code = run_batch(&session, &text, &mut io::stdout().lock(), &mut io::stderr().lock())?;
            Ok(code as u8)
        }
        Command::Ingest { file, config, log, data } => {
            let Some(dir) = data else {
                bail!("no data directory; pass --data or set SIGNAL_DATA_DIR");
            };
            datadir::check_log_id(&log)?;
            let format = SourceFormat::from_path(&file)
                .with_context(|| format!("{}: expected a .csv, .tsv or .xes file", file.display()))?;
            let config = config.as_deref().map(read_config).transpose()?;
            let bytes = std::fs::read(&file).with_context(|| format!("cannot read {}", file.display()))?;
            let catalog = Catalog::new();
            if dir.exists() {
                datadir::load_dir(&catalog, &dir)?;
            }
            if catalog.contains(&log) {
                bail!("log '{log}' already exists in {}", dir.display());
            }
            let parsed = datadir::load_bytes(&bytes, format, config.as_deref(), &log)
                .map_err(|e| anyhow::anyhow!("error[{}]: {e}", e.code()))?;
            datadir::persist(&dir, &log, format, &bytes, config.as_deref())?;
            println!("ingested {log}: {} cases, {} events", parsed.case_count(), parsed.event_count());
            Ok(0)
        }
        Command::Serve { port, host, data, max_upload_bytes } => {
            let engine = engine_for(data.as_deref())?;
            let state = Arc::new(AppState { engine, data_dir: data, max_upload_bytes });
            let addr: SocketAddr = format!("{host}:{port}").parse().context("invalid listen address")?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::bind(addr).await?;
                tracing::info!(%addr, "listening");
                axum::serve(listener, http::router(state)).await?;
                Ok::<_, anyhow::Error>(())
            })?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let default_filter = if matches!(cli.command, Command::Serve { .. }) { "info" } else { "warn" };
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| default_filter.into()),
        )
        .with_writer(io::stderr)
        .init();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
