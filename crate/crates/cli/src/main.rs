//! `argudialog`: chat with, validate, replay and serve an argumentation KB.

mod commands;
mod render;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use argudialog_core::engine::ConflictPolicy;
use argudialog_core::matcher::Measure;
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "argudialog",
    version,
    about = "Argumentation-backed dialogue engine"
)]
struct Cli {
    #[command(flatten)]
    shared: Shared,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand; each has an `ARGUDIALOG_` env override.
#[derive(Debug, Clone, Args)]
pub struct Shared {
    /// Knowledge-base JSON file. Defaults to the bundled COVID-19 vaccine KB.
    #[arg(long, global = true, env = "ARGUDIALOG_KB")]
    pub kb: Option<PathBuf>,
    /// Minimum similarity for an utterance to activate a fact.
    #[arg(
        long,
        global = true,
        env = "ARGUDIALOG_THRESHOLD",
        default_value_t = 0.55
    )]
    pub threshold: f64,
    #[arg(
        long,
        global = true,
        env = "ARGUDIALOG_MEASURE",
        default_value = "bray-curtis"
    )]
    pub measure: Measure,
    /// Score gap needed to pick one of two contradicting facts.
    #[arg(
        long,
        global = true,
        env = "ARGUDIALOG_EXCLUSIVE_MARGIN",
        default_value_t = 0.02
    )]
    pub exclusive_margin: f64,
    #[arg(
        long,
        global = true,
        env = "ARGUDIALOG_CONFLICT_POLICY",
        default_value = "keep-first"
    )]
    pub conflict_policy: ConflictPolicy,
    /// External embedding endpoint (`POST {"texts": [...]}`).
    #[arg(long, global = true, env = "ARGUDIALOG_EMBEDDING_URL")]
    pub embedding_url: Option<String>,
    #[arg(
        long,
        global = true,
        env = "ARGUDIALOG_EMBEDDING_TIMEOUT_MS",
        default_value_t = 2000
    )]
    pub embedding_timeout_ms: u64,
    /// Treat unknown KB fields as warnings instead of errors.
    #[arg(long, global = true, env = "ARGUDIALOG_LENIENT")]
    pub lenient: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Interactive conversation on stdin/stdout.
    Chat {
        /// Print each event as a JSON line.
        #[arg(long)]
        json: bool,
    },
    /// Check a knowledge base and print its report.
    Validate {
        /// KB file; falls back to --kb.
        path: Option<PathBuf>,
        /// Fail on warnings too.
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        json: bool,
    },
    /// Run scripted transcripts and report the first divergence.
    Replay {
        #[arg(required = true)]
        transcripts: Vec<PathBuf>,
    },
    /// Classify replies for a given set of facts.
    Reason {
        /// Activated facts, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "")]
        facts: Vec<String>,
        /// Newly activated facts; defaults to all of --facts.
        #[arg(long, value_delimiter = ',')]
        new: Option<Vec<String>>,
        #[arg(long)]
        json: bool,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "ARGUDIALOG_LISTEN", default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
        /// Enable cross-origin requests from this origin (`*` for any).
        #[arg(long, env = "ARGUDIALOG_ALLOW_ORIGIN")]
        allow_origin: Option<String>,
        /// Maximum messages per session.
        #[arg(long, env = "ARGUDIALOG_MESSAGE_CAP", default_value_t = argudialog_server::DEFAULT_MESSAGE_CAP)]
        message_cap: usize,
        /// Idle time before a session expires.
        #[arg(long, env = "ARGUDIALOG_IDLE_TTL_SECS", default_value_t = 1800)]
        idle_ttl_secs: u64,
    },
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_env("ARGUDIALOG_LOG")
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .init();

    let cli = Cli::parse();
    let shared = &cli.shared;
    let result = match cli.command {
        Command::Chat { json } => commands::chat(shared, json),
        Command::Validate { path, strict, json } => commands::validate(shared, path, strict, json),
        Command::Replay { transcripts } => commands::replay(shared, &transcripts),
        Command::Reason { facts, new, json } => commands::reason(shared, facts, new, json),
        Command::Serve {
            listen,
            allow_origin,
            message_cap,
            idle_ttl_secs,
        } => commands::serve(shared, listen, allow_origin, message_cap, idle_ttl_secs),
    };
    match result {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
