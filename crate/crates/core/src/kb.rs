//! Knowledge-base files: JSON parsing, structural validation and lints.
//!
//! A file is read in two stages. [`read_kb_file`] turns bytes into a raw
//! [`KbFile`] (syntax and shape only), then [`validate_kb`] checks the graph
//! invariants and runs the authoring lints. [`parse_kb`] does both and
//! materializes a [`KbDocument`], refusing anything with errors.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::graph::{ArgumentationGraph, GraphError, ReplyArgument, StatusArgument};
use crate::id::ArgId;
use crate::matcher::{IntentPhrases, MatcherConfig, bray_curtis_sim, vectorize};

pub const FORMAT_VERSION: &str = "1";

const CASE_STUDY_KB: &str = include_str!("../fixtures/covid_vaccine.json");

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KbError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("duplicate id `{id}` at `{path}`")]
    DuplicateId { id: String, path: String },
    #[error("dangling edge endpoint at `{path}`: {message}")]
    DanglingEdge { path: String, message: String },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KbMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub greeting: Option<String>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

/// The on-disk shape, before any invariant is checked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KbFile {
    pub version: String,
    #[serde(default)]
    pub metadata: KbMetadata,
    pub statuses: Vec<StatusArgument>,
    pub replies: Vec<ReplyArgument>,
    #[serde(default)]
    pub attacks: Vec<(ArgId, ArgId)>,
    #[serde(default)]
    pub supports: Vec<(ArgId, ArgId)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intents: Option<IntentPhrases>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IssueCode {
    SyntaxError,
    SchemaError,
    UnknownField,
    UnsupportedVersion,
    InvalidId,
    DuplicateId,
    EmptyAnnotations,
    EmptyAnnotation,
    EmptyReplyText,
    DanglingEdge,
    InvalidAttack,
    InvalidSupport,
    SelfAttack,
    EmptyIntentList,
    // Warnings from here on.
    EmptyFactText,
    DuplicateEdge,
    UnsupportedReply,
    RemarkViolation,
    AmbiguousAnnotations,
    MissingPrompt,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub code: IssueCode,
    pub locus: String,
    pub message: String,
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match serde_json::to_value(self) {
            Ok(Value::String(name)) => f.write_str(&name),
            _ => write!(f, "{self:?}"),
        }
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.locus.is_empty() {
            write!(f, "{} {}", self.code, self.message)
        } else {
            write!(f, "{} {}: {}", self.code, self.locus, self.message)
        }
    }
}

impl Issue {
    fn new(code: IssueCode, locus: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            code,
            locus: locus.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn is_clean(&self) -> bool {
        self.errors.is_empty() && self.warnings.is_empty()
    }

    fn error(&mut self, code: IssueCode, locus: impl Into<String>, message: impl Into<String>) {
        self.errors.push(Issue::new(code, locus, message));
    }

    fn warn(&mut self, code: IssueCode, locus: impl Into<String>, message: impl Into<String>) {
        self.warnings.push(Issue::new(code, locus, message));
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ParseMode {
    /// Unknown fields are errors.
    #[default]
    Strict,
    /// Unknown fields are warnings.
    Lenient,
}

/// A validated knowledge base.
#[derive(Debug, Clone, PartialEq)]
pub struct KbDocument {
    pub version: String,
    pub metadata: KbMetadata,
    pub graph: ArgumentationGraph,
    pub intents: Option<IntentPhrases>,
}

impl KbDocument {
    /// Validates `file` and builds the graph.
    pub fn from_file(file: KbFile) -> Result<Self, KbError> {
        let report = validate_kb(&file);
        if let Some(first) = report.errors.first() {
            return Err(issue_to_error(first));
        }
        let graph =
            ArgumentationGraph::new(file.statuses, file.replies, file.attacks, file.supports)
                .map_err(|e| graph_error(&e))?;
        Ok(Self {
            version: file.version,
            metadata: file.metadata,
            graph,
            intents: file.intents,
        })
    }

    pub fn to_file(&self) -> KbFile {
        KbFile {
            version: self.version.clone(),
            metadata: self.metadata.clone(),
            statuses: self.graph.statuses().cloned().collect(),
            replies: self.graph.replies().cloned().collect(),
            attacks: self.graph.attacks().cloned().collect(),
            supports: self.graph.supports().cloned().collect(),
            intents: self.intents.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("KB serializes")
    }

    pub fn intents_or_default(&self) -> IntentPhrases {
        self.intents.clone().unwrap_or_default()
    }
}

fn issue_to_error(issue: &Issue) -> KbError {
    match issue.code {
        IssueCode::SyntaxError => KbError::Syntax {
            line: 0,
            column: 0,
            message: issue.message.clone(),
        },
        IssueCode::DuplicateId => KbError::DuplicateId {
            id: issue.message.clone(),
            path: issue.locus.clone(),
        },
        IssueCode::DanglingEdge => KbError::DanglingEdge {
            path: issue.locus.clone(),
            message: issue.message.clone(),
        },
        _ => KbError::Schema {
            path: issue.locus.clone(),
            message: issue.message.clone(),
        },
    }
}

fn graph_error(e: &GraphError) -> KbError {
    match e {
        GraphError::DuplicateId(id) => KbError::DuplicateId {
            id: id.to_string(),
            path: String::new(),
        },
        GraphError::DanglingEdge(..) => KbError::DanglingEdge {
            path: String::new(),
            message: e.to_string(),
        },
        other => KbError::Schema {
            path: String::new(),
            message: other.to_string(),
        },
    }
}

fn json_path(path: &serde_ignored::Path<'_>) -> String {
    use serde_ignored::Path;
    match path {
        Path::Root => String::new(),
        Path::Seq { parent, index } => format!("{}[{index}]", json_path(parent)),
        Path::Map { parent, key } => match json_path(parent) {
            p if p.is_empty() => key.clone(),
            p => format!("{p}.{key}"),
        },
        Path::Some { parent }
        | Path::NewtypeStruct { parent }
        | Path::NewtypeVariant { parent } => json_path(parent),
    }
}

/// Reads the raw file, also returning the paths of fields that are not part
/// of the format.
pub fn read_kb_file(bytes: &[u8]) -> Result<(KbFile, Vec<String>), KbError> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    let mut unknown = Vec::new();
    let file = {
        let mut track = |path: serde_ignored::Path<'_>| unknown.push(json_path(&path));
        let ignored = serde_ignored::Deserializer::new(&mut de, &mut track);
        serde_path_to_error::deserialize::<_, KbFile>(ignored).map_err(|err| {
            let path = err.path().to_string();
            json_error(err.into_inner(), path)
        })?
    };
    de.end().map_err(|e| json_error(e, String::new()))?;
    Ok((file, unknown))
}

fn json_error(err: serde_json::Error, path: String) -> KbError {
    use serde_json::error::Category;
    match err.classify() {
        Category::Data => KbError::Schema {
            path,
            message: err.to_string(),
        },
        Category::Io | Category::Syntax | Category::Eof => KbError::Syntax {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        },
    }
}

/// Reads and fully materializes a KB.
pub fn parse_kb(bytes: &[u8], mode: ParseMode) -> Result<KbDocument, KbError> {
    let (file, unknown) = read_kb_file(bytes)?;
    if mode == ParseMode::Strict
        && let Some(path) = unknown.first()
    {
        return Err(KbError::Schema {
            path: path.clone(),
            message: "unknown field".into(),
        });
    }
    KbDocument::from_file(file)
}

/// Parse plus validation, reported rather than raised. The file is `None`
/// when it could not be read at all.
pub fn check_kb_bytes(bytes: &[u8], mode: ParseMode) -> (Option<KbFile>, ValidationReport) {
    match read_kb_file(bytes) {
        Err(err) => {
            let mut report = ValidationReport::default();
            match &err {
                KbError::Schema { path, .. } => {
                    report.error(IssueCode::SchemaError, path.clone(), err.to_string())
                }
                KbError::Syntax { line, column, .. } => report.error(
                    IssueCode::SyntaxError,
                    format!("line {line}, column {column}"),
                    err.to_string(),
                ),
                _ => report.error(IssueCode::SchemaError, "", err.to_string()),
            }
            (None, report)
        }
        Ok((file, unknown)) => {
            let mut report = validate_kb(&file);
            for path in unknown {
                let issue = Issue::new(
                    IssueCode::UnknownField,
                    path,
                    "field is not part of the format",
                );
                match mode {
                    ParseMode::Strict => report.errors.insert(0, issue),
                    ParseMode::Lenient => report.warnings.insert(0, issue),
                }
            }
            (Some(file), report)
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Status,
    Reply,
}

/// Checks every graph invariant (errors) and the authoring lints
/// (warnings). Lints only run on structurally sound files.
pub fn validate_kb(file: &KbFile) -> ValidationReport {
    let mut report = ValidationReport::default();

    if file.version != FORMAT_VERSION {
        report.error(
            IssueCode::UnsupportedVersion,
            "version",
            format!("unsupported format version `{}`", file.version),
        );
    }

    let mut kinds: BTreeMap<&str, Kind> = BTreeMap::new();
    for (i, s) in file.statuses.iter().enumerate() {
        let locus = format!("statuses[{i}]");
        check_id(&mut report, &mut kinds, s.id.as_str(), Kind::Status, &locus);
        if s.annotations.is_empty() {
            report.error(
                IssueCode::EmptyAnnotations,
                format!("{locus}.annotations"),
                format!("status `{}` has no annotations", s.id),
            );
        }
        for (j, a) in s.annotations.iter().enumerate() {
            if a.trim().is_empty() {
                report.error(
                    IssueCode::EmptyAnnotation,
                    format!("{locus}.annotations[{j}]"),
                    format!("status `{}` has a blank annotation", s.id),
                );
            }
        }
        if s.fact_text.trim().is_empty() {
            report.warn(
                IssueCode::EmptyFactText,
                format!("{locus}.fact_text"),
                format!("status `{}` has no fact text to show in explanations", s.id),
            );
        }
    }
    for (i, r) in file.replies.iter().enumerate() {
        let locus = format!("replies[{i}]");
        check_id(&mut report, &mut kinds, r.id.as_str(), Kind::Reply, &locus);
        if r.reply_text.trim().is_empty() {
            report.error(
                IssueCode::EmptyReplyText,
                format!("{locus}.reply_text"),
                format!("reply `{}` has no text", r.id),
            );
        }
    }

    let mut seen_attacks = BTreeSet::new();
    for (i, (src, dst)) in file.attacks.iter().enumerate() {
        let locus = format!("attacks[{i}]");
        let (Some(sk), Some(_)) = (kinds.get(src.as_str()), kinds.get(dst.as_str())) else {
            dangling(&mut report, &kinds, &locus, src, dst);
            continue;
        };
        if *sk != Kind::Status {
            report.error(
                IssueCode::InvalidAttack,
                locus,
                format!("attack ({src}, {dst}) must originate from a status argument"),
            );
        } else if src == dst {
            report.error(
                IssueCode::SelfAttack,
                locus,
                format!("`{src}` attacks itself"),
            );
        } else if !seen_attacks.insert((src, dst)) {
            report.warn(
                IssueCode::DuplicateEdge,
                locus,
                format!("attack ({src}, {dst}) repeated"),
            );
        }
    }
    let mut seen_supports = BTreeSet::new();
    for (i, (src, dst)) in file.supports.iter().enumerate() {
        let locus = format!("supports[{i}]");
        let (Some(sk), Some(dk)) = (kinds.get(src.as_str()), kinds.get(dst.as_str())) else {
            dangling(&mut report, &kinds, &locus, src, dst);
            continue;
        };
        if *sk != Kind::Status || *dk != Kind::Reply {
            report.error(
                IssueCode::InvalidSupport,
                locus,
                format!("support ({src}, {dst}) must go from a status to a reply"),
            );
        } else if !seen_supports.insert((src, dst)) {
            report.warn(
                IssueCode::DuplicateEdge,
                locus,
                format!("support ({src}, {dst}) repeated"),
            );
        }
    }

    if let Some(intents) = &file.intents {
        if intents.stop.is_empty() {
            report.error(
                IssueCode::EmptyIntentList,
                "intents.stop",
                "stop phrase list is empty",
            );
        }
        if intents.explain.is_empty() {
            report.error(
                IssueCode::EmptyIntentList,
                "intents.explain",
                "explanation phrase list is empty",
            );
        }
    }

    if report.errors.is_empty() {
        lint(file, &mut report);
    }
    report
}

fn check_id<'a>(
    report: &mut ValidationReport,
    kinds: &mut BTreeMap<&'a str, Kind>,
    id: &'a str,
    kind: Kind,
    locus: &str,
) {
    if !ArgId::is_well_formed(id) {
        report.error(
            IssueCode::InvalidId,
            format!("{locus}.id"),
            format!("id `{id}` must match [A-Za-z0-9_-]+"),
        );
    }
    if kinds.contains_key(id) {
        report.error(IssueCode::DuplicateId, format!("{locus}.id"), id.to_owned());
    } else {
        kinds.insert(id, kind);
    }
}

fn dangling(
    report: &mut ValidationReport,
    kinds: &BTreeMap<&str, Kind>,
    locus: &str,
    src: &ArgId,
    dst: &ArgId,
) {
    let missing: Vec<&str> = [src.as_str(), dst.as_str()]
        .into_iter()
        .filter(|id| !kinds.contains_key(id))
        .collect();
    report.error(
        IssueCode::DanglingEdge,
        locus,
        format!(
            "edge ({src}, {dst}) references unknown id(s): {}",
            missing.join(", ")
        ),
    );
}

fn lint(file: &KbFile, report: &mut ValidationReport) {
    let Ok(graph) = ArgumentationGraph::new(
        file.statuses.iter().cloned(),
        file.replies.iter().cloned(),
        file.attacks.iter().cloned(),
        file.supports.iter().cloned(),
    ) else {
        return;
    };

    let mut defenders: BTreeSet<&ArgId> = BTreeSet::new();
    for reply in graph.replies() {
        let id = reply.id.as_str();
        if graph.supporters_of(id).next().is_none() {
            report.warn(
                IssueCode::UnsupportedReply,
                format!("replies.{id}"),
                format!("reply `{id}` has no supporter and can never be given"),
            );
        }
        for attacker in graph.attackers_of(id) {
            let mut counters = graph.attackers_of(attacker.as_str()).peekable();
            if counters.peek().is_none() {
                report.warn(
                    IssueCode::RemarkViolation,
                    format!("replies.{id}"),
                    format!(
                        "attacker `{attacker}` of reply `{id}` has no attacker; elicitation can never make `{id}` consistent"
                    ),
                );
            }
            defenders.extend(counters);
        }
    }

    for d in defenders {
        let status = graph.status(d.as_str()).expect("defenders are statuses");
        if status.prompt.as_deref().is_none_or(|p| p.trim().is_empty()) {
            report.warn(
                IssueCode::MissingPrompt,
                format!("statuses.{d}"),
                format!(
                    "`{d}` is asked during elicitation but has no prompt; a template will be used"
                ),
            );
        }
    }

    // A pair whose annotations are this close cannot be told apart by the
    // matcher's exclusivity rule.
    let near_identical = 1.0 - MatcherConfig::default().exclusive_margin;
    let statuses: Vec<&StatusArgument> = graph.statuses().collect();
    for (i, a) in statuses.iter().enumerate() {
        for b in &statuses[i + 1..] {
            if !graph.mutually_attack(a.id.as_str(), b.id.as_str()) {
                continue;
            }
            let best = a
                .annotations
                .iter()
                .flat_map(|x| {
                    b.annotations
                        .iter()
                        .map(move |y| bray_curtis_sim(&vectorize(x), &vectorize(y)))
                })
                .fold(0.0_f64, f64::max);
            if best >= near_identical {
                report.warn(
                    IssueCode::AmbiguousAnnotations,
                    format!("statuses.{}", a.id),
                    format!(
                        "`{}` and `{}` attack each other but have near-identical annotations (similarity {best:.3})",
                        a.id, b.id
                    ),
                );
            }
        }
    }
}

/// The bundled vaccine-information excerpt.
pub fn builtin_case_study_kb() -> KbDocument {
    parse_kb(CASE_STUDY_KB.as_bytes(), ParseMode::Strict).expect("bundled KB is valid")
}

pub fn builtin_case_study_source() -> &'static str {
    CASE_STUDY_KB
}
