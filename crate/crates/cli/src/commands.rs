use std::collections::BTreeSet;
use std::io::{self, BufRead, IsTerminal, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use argudialog_core::engine::{DialogueEngine, EngineConfig, Phase};
use argudialog_core::graph::{ActivatedSet, ArgumentationGraph};
use argudialog_core::id::ArgId;
use argudialog_core::kb::{
    KbDocument, ParseMode, ValidationReport, builtin_case_study_source, check_kb_bytes,
};
use argudialog_core::matcher::{MatcherConfig, ProviderConfig};
use argudialog_core::transcript::{Transcript, replay as run_replay};
use argudialog_server::{AppState, InMemorySessionStore, LoadedKb, ServerConfig};
use serde_json::json;

use crate::Shared;
use crate::render::render_event;

const EXIT_IO: u8 = 1;
const EXIT_INVALID: u8 = 2;

pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn io(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_IO,
            message: message.into(),
        }
    }

    fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }
}

type Outcome = Result<ExitCode, Failure>;

fn parse_mode(shared: &Shared) -> ParseMode {
    if shared.lenient {
        ParseMode::Lenient
    } else {
        ParseMode::Strict
    }
}

fn kb_label(path: Option<&Path>) -> String {
    path.map(|p| p.display().to_string())
        .unwrap_or_else(|| "<bundled covid_vaccine.json>".into())
}

fn read_kb_bytes(path: Option<&Path>) -> Result<Vec<u8>, Failure> {
    match path {
        Some(p) => {
            std::fs::read(p).map_err(|e| Failure::io(format!("cannot read {}: {e}", p.display())))
        }
        None => Ok(builtin_case_study_source().as_bytes().to_vec()),
    }
}

fn print_report(report: &ValidationReport, out: &mut impl Write) -> io::Result<()> {
    for issue in &report.errors {
        writeln!(out, "error   {issue}")?;
    }
    for issue in &report.warnings {
        writeln!(out, "warning {issue}")?;
    }
    writeln!(
        out,
        "{} error(s), {} warning(s)",
        report.errors.len(),
        report.warnings.len()
    )
}

/// Reads and validates the KB; validation errors are printed to stderr.
fn load_kb(shared: &Shared) -> Result<KbDocument, Failure> {
    let path = shared.kb.as_deref();
    let bytes = read_kb_bytes(path)?;
    let (file, report) = check_kb_bytes(&bytes, parse_mode(shared));
    let invalid = || {
        let _ = print_report(&report, &mut io::stderr());
        Failure::invalid(format!("{} is not a valid knowledge base", kb_label(path)))
    };
    match file {
        Some(file) if report.is_ok() => KbDocument::from_file(file).map_err(|_| invalid()),
        _ => Err(invalid()),
    }
}

fn engine_config(shared: &Shared) -> EngineConfig {
    EngineConfig {
        matcher: MatcherConfig {
            threshold: shared.threshold,
            measure: shared.measure,
            exclusive_margin: shared.exclusive_margin,
            provider: shared.embedding_url.as_ref().map(|url| ProviderConfig {
                url: url.clone(),
                timeout_ms: shared.embedding_timeout_ms,
            }),
        },
        conflict_policy: shared.conflict_policy,
    }
}

fn build_engine(shared: &Shared, kb: KbDocument) -> Result<Arc<DialogueEngine>, Failure> {
    DialogueEngine::new(kb, engine_config(shared))
        .map(Arc::new)
        .map_err(|e| Failure::invalid(e.to_string()))
}

fn io_failure(e: io::Error) -> Failure {
    Failure::io(format!("I/O failure: {e}"))
}

pub fn chat(shared: &Shared, json_output: bool) -> Outcome {
    let engine = build_engine(shared, load_kb(shared)?)?;
    let mut session = engine.start_session();
    let stdin = io::stdin();
    let interactive = stdin.is_terminal();
    let mut out = io::stdout().lock();
    if !json_output {
        writeln!(out, "{}", engine.greeting()).map_err(io_failure)?;
    }
    let mut lines = stdin.lock().lines();
    loop {
        if interactive {
            write!(out, "> ").map_err(io_failure)?;
            out.flush().map_err(io_failure)?;
        }
        let Some(line) = lines.next() else { break };
        let line = line.map_err(io_failure)?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let events = session
            .handle_utterance(text)
            .map_err(|e| Failure::io(e.to_string()))?;
        for event in &events {
            if json_output {
                let line = serde_json::to_string(event).map_err(|e| Failure::io(e.to_string()))?;
                writeln!(out, "{line}").map_err(io_failure)?;
            } else {
                writeln!(out, "{}", render_event(engine.graph(), event)).map_err(io_failure)?;
            }
        }
        if session.phase() == Phase::Terminated {
            break;
        }
    }
    Ok(ExitCode::SUCCESS)
}

pub fn validate(
    shared: &Shared,
    path: Option<PathBuf>,
    strict: bool,
    json_output: bool,
) -> Outcome {
    let path = path.or_else(|| shared.kb.clone());
    let bytes = read_kb_bytes(path.as_deref())?;
    let (_, report) = check_kb_bytes(&bytes, parse_mode(shared));
    let mut out = io::stdout().lock();
    if json_output {
        let text = serde_json::to_string_pretty(&report).map_err(|e| Failure::io(e.to_string()))?;
        writeln!(out, "{text}").map_err(io_failure)?;
    } else {
        writeln!(out, "{}", kb_label(path.as_deref())).map_err(io_failure)?;
        print_report(&report, &mut out).map_err(io_failure)?;
    }
    let failed = !report.is_ok() || (strict && !report.warnings.is_empty());
    Ok(if failed {
        ExitCode::from(EXIT_INVALID)
    } else {
        ExitCode::SUCCESS
    })
}

pub fn replay(shared: &Shared, transcripts: &[PathBuf]) -> Outcome {
    let engine = build_engine(shared, load_kb(shared)?)?;
    let mut parsed = Vec::new();
    for path in transcripts {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::io(format!("cannot read {}: {e}", path.display())))?;
        let transcript = Transcript::parse(&text).map_err(|e| {
            Failure::invalid(format!("{}: malformed transcript: {e}", path.display()))
        })?;
        parsed.push((path, transcript));
    }
    let mut out = io::stdout().lock();
    let mut failures = 0;
    for (path, transcript) in &parsed {
        let report = run_replay(&engine, transcript);
        match &report.divergence {
            None => writeln!(out, "PASS {}", path.display()),
            Some(d) => {
                failures += 1;
                writeln!(out, "FAIL {}: {d}", path.display())
            }
        }
        .map_err(io_failure)?;
    }
    Ok(if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_IO)
    })
}

fn to_set(graph: &ArgumentationGraph, ids: &[String], flag: &str) -> Result<ActivatedSet, Failure> {
    let mut set = ActivatedSet::new();
    for raw in ids.iter().map(|s| s.trim()).filter(|s| !s.is_empty()) {
        let id = graph
            .status_id(raw)
            .map_err(|_| Failure::invalid(format!("{flag}: `{raw}` is not a status argument")))?;
        set.insert(id.clone());
    }
    Ok(set)
}

fn list(ids: &BTreeSet<ArgId>) -> String {
    if ids.is_empty() {
        "(none)".into()
    } else {
        ids.iter().map(ArgId::as_str).collect::<Vec<_>>().join(", ")
    }
}

pub fn reason(
    shared: &Shared,
    facts: Vec<String>,
    new: Option<Vec<String>>,
    json_output: bool,
) -> Outcome {
    let kb = load_kb(shared)?;
    let graph = &kb.graph;
    let s = to_set(graph, &facts, "--facts")?;
    let n = match new {
        Some(new) => to_set(graph, &new, "--new")?,
        None => s.clone(),
    };
    if !n.is_subset(&s) {
        return Err(Failure::invalid("--new must be a subset of --facts"));
    }
    let classification = graph
        .classify_replies(&s, &n)
        .map_err(|e| Failure::invalid(e.to_string()))?;

    let mut excluded = Vec::new();
    for reply in graph.replies() {
        let id = reply.id.as_str();
        let supported = graph.set_supports(&s, id).unwrap_or(false);
        let attackers = graph.attackers_in(&s, id).unwrap_or_default();
        if supported && !attackers.is_empty() {
            excluded.push((reply.id.clone(), attackers));
        }
    }
    let mut defence = Vec::new();
    for r in &classification.pcons {
        let needed = graph
            .defence_candidates(&s, r.as_str())
            .map_err(|e| Failure::invalid(e.to_string()))?;
        defence.push((r.clone(), needed));
    }

    let mut out = io::stdout().lock();
    if json_output {
        let value = json!({
            "cons": classification.cons,
            "pcons": classification.pcons,
            "excluded": excluded
                .iter()
                .map(|(r, by)| json!({"reply_id": r, "attacked_by": by}))
                .collect::<Vec<_>>(),
            "defence_candidates": defence
                .iter()
                .map(|(r, d)| json!({"reply_id": r, "candidates": d}))
                .collect::<Vec<_>>(),
        });
        let text = serde_json::to_string_pretty(&value).map_err(|e| Failure::io(e.to_string()))?;
        writeln!(out, "{text}").map_err(io_failure)?;
    } else {
        let mut write = || -> io::Result<()> {
            writeln!(out, "cons: {}", list(&classification.cons))?;
            writeln!(out, "pcons: {}", list(&classification.pcons))?;
            for (r, by) in &excluded {
                writeln!(out, "{r} excluded: attacked by {}", list(by))?;
            }
            for (r, needed) in &defence {
                let needed: Vec<&str> = needed.iter().map(ArgId::as_str).collect();
                writeln!(out, "{r} needs defence from: {}", needed.join(", "))?;
            }
            Ok(())
        };
        write().map_err(io_failure)?;
    }
    Ok(ExitCode::SUCCESS)
}

pub fn serve(
    shared: &Shared,
    listen: SocketAddr,
    allow_origin: Option<String>,
    message_cap: usize,
    idle_ttl_secs: u64,
) -> Outcome {
    let kb = match load_kb(shared) {
        Ok(kb) => match build_engine(shared, kb) {
            Ok(engine) => LoadedKb::Ready(engine),
            Err(f) => LoadedKb::Invalid(f.message),
        },
        Err(f) if f.code == EXIT_INVALID => {
            tracing::error!("{}; session endpoints will answer 503", f.message);
            LoadedKb::Invalid(f.message)
        }
        Err(f) => return Err(f),
    };
    let store = Arc::new(InMemorySessionStore::new(Duration::from_secs(
        idle_ttl_secs,
    )));
    let state = AppState::new(
        kb,
        store,
        ServerConfig {
            message_cap,
            allow_origin,
        },
    );
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(io_failure)?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(listen)
            .await
            .map_err(|e| Failure::io(format!("cannot listen on {listen}: {e}")))?;
        let addr = listener.local_addr().map_err(io_failure)?;
        eprintln!("listening on http://{addr}");
        argudialog_server::serve(listener, state, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(io_failure)
    })?;
    Ok(ExitCode::SUCCESS)
}
