//! Turn-based dialogue sessions.
//!
//! A session answers only with replies that are consistent with everything
//! the user has said. When the best candidate is merely potentially
//! consistent, the session asks for the facts that would defend it, one
//! prompt per turn, and decides once the round of prompts is over.
//!
//! The loop is reified as a phase machine: `AwaitingInput` handles fresh
//! questions, `Eliciting` consumes answers to pending prompts, `Terminated`
//! refuses further input.

use std::cmp::Reverse;
use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{
    ActivatedSet, ArgumentationGraph, Explanation, GraphError, NotGiven, ReplyClassification,
};
use crate::id::ArgId;
use crate::kb::{KbDocument, KbFile, ValidationReport, validate_kb};
use crate::matcher::{Intent, Matcher, MatcherConfig, MatcherError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("knowledge base failed validation with {} error(s)", .0.errors.len())]
    InvalidKb(ValidationReport),
    #[error(transparent)]
    Matcher(#[from] MatcherError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("session has terminated")]
    SessionTerminated,
    #[error("no candidate replies to choose from")]
    EmptyCandidates,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Phase {
    #[default]
    AwaitingInput,
    Eliciting,
    Terminated,
}

/// What to do with a newly matched fact that conflicts with known facts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConflictPolicy {
    /// Drop the new fact.
    #[default]
    KeepFirst,
    /// Retract the old facts it conflicts with.
    KeepLatest,
    /// End the conversation.
    Terminate,
}

impl FromStr for ConflictPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "keep-first" => Ok(Self::KeepFirst),
            "keep-latest" => Ok(Self::KeepLatest),
            "terminate" => Ok(Self::Terminate),
            other => Err(format!(
                "unknown conflict policy `{other}` (expected keep-first, keep-latest or terminate)"
            )),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub matcher: MatcherConfig,
    pub conflict_policy: ConflictPolicy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EventKind {
    ReplyGiven,
    Prompt,
    Explanation,
    Terminated,
    NoMatch,
    ConflictDropped,
    NoReplyPossible,
}

impl EventKind {
    pub const ALL: [EventKind; 7] = [
        EventKind::ReplyGiven,
        EventKind::Prompt,
        EventKind::Explanation,
        EventKind::Terminated,
        EventKind::NoMatch,
        EventKind::ConflictDropped,
        EventKind::NoReplyPossible,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::ReplyGiven => "REPLY_GIVEN",
            EventKind::Prompt => "PROMPT",
            EventKind::Explanation => "EXPLANATION",
            EventKind::Terminated => "TERMINATED",
            EventKind::NoMatch => "NO_MATCH",
            EventKind::ConflictDropped => "CONFLICT_DROPPED",
            EventKind::NoReplyPossible => "NO_REPLY_POSSIBLE",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown event kind `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplanationPayload {
    #[serde(flatten)]
    pub explanation: Explanation,
    /// Fact texts of the supporting arguments.
    pub because: Vec<String>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DialogueEvent {
    ReplyGiven {
        reply_id: ArgId,
        text: String,
    },
    Prompt {
        status_id: ArgId,
        text: String,
    },
    Explanation(ExplanationPayload),
    Terminated,
    NoMatch {
        message: String,
    },
    ConflictDropped {
        dropped: Vec<ArgId>,
        conflicts_with: Vec<ArgId>,
    },
    NoReplyPossible {
        message: String,
    },
}

impl DialogueEvent {
    pub fn kind(&self) -> EventKind {
        match self {
            DialogueEvent::ReplyGiven { .. } => EventKind::ReplyGiven,
            DialogueEvent::Prompt { .. } => EventKind::Prompt,
            DialogueEvent::Explanation(_) => EventKind::Explanation,
            DialogueEvent::Terminated => EventKind::Terminated,
            DialogueEvent::NoMatch { .. } => EventKind::NoMatch,
            DialogueEvent::ConflictDropped { .. } => EventKind::ConflictDropped,
            DialogueEvent::NoReplyPossible { .. } => EventKind::NoReplyPossible,
        }
    }

    /// One-line payload rendering used by transcripts.
    pub fn payload_text(&self) -> String {
        match self {
            DialogueEvent::ReplyGiven { reply_id, text } => format!("{reply_id}: {text}"),
            DialogueEvent::Prompt { status_id, text } => format!("{status_id}: {text}"),
            DialogueEvent::Explanation(p) => {
                let e = &p.explanation;
                let not_given: Vec<String> = e
                    .not_given
                    .iter()
                    .map(|ng| {
                        format!(
                            "({},{}):{}",
                            ng.reply_id,
                            braces(&ng.attackers_in_s),
                            reason_str(ng)
                        )
                    })
                    .collect();
                format!(
                    "reply={} supp={} not_given=[{}] {}",
                    e.reply_id,
                    braces(&e.supp),
                    not_given.join(", "),
                    p.text
                )
            }
            DialogueEvent::Terminated => String::new(),
            DialogueEvent::NoMatch { message } | DialogueEvent::NoReplyPossible { message } => {
                message.clone()
            }
            DialogueEvent::ConflictDropped {
                dropped,
                conflicts_with,
            } => format!(
                "dropped {} (conflicts with {})",
                join_ids(dropped),
                join_ids(conflicts_with)
            ),
        }
    }
}

fn reason_str(ng: &NotGiven) -> String {
    serde_json::to_value(ng.reason)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

fn braces(ids: &BTreeSet<ArgId>) -> String {
    let inner: Vec<&str> = ids.iter().map(ArgId::as_str).collect();
    format!("{{{}}}", inner.join(","))
}

fn join_ids(ids: &[ArgId]) -> String {
    ids.iter().map(ArgId::as_str).collect::<Vec<_>>().join(",")
}

/// Per-conversation state.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    /// Every fact activated so far, in activation order.
    pub activated: ActivatedSet,
    pub last_reply: Option<ArgId>,
    pub phase: Phase,
    /// Defence prompts still to ask in the current round.
    pub pending_prompts: VecDeque<ArgId>,
    /// Facts collected during the current round of prompts.
    pub n_new: ActivatedSet,
    /// Reply under elicitation; set exactly while eliciting.
    pub candidate: Option<ArgId>,
    pub asked: ActivatedSet,
    /// Replies abandoned during the current turn.
    pub excluded: BTreeSet<ArgId>,
}

/// Deterministic choice: most supporters in `activated`, then smallest id.
pub fn select_candidate_reply(
    graph: &ArgumentationGraph,
    candidates: &BTreeSet<ArgId>,
    activated: &ActivatedSet,
) -> Result<ArgId, EngineError> {
    candidates
        .iter()
        .min_by_key(|r| {
            let support = graph
                .supporters_of(r.as_str())
                .filter(|a| activated.contains(a.as_str()))
                .count();
            (Reverse(support), *r)
        })
        .cloned()
        .ok_or(EngineError::EmptyCandidates)
}

/// The node's prompt, or a yes/no template over its fact text.
pub fn prompt_text_for(graph: &ArgumentationGraph, status_id: &str) -> Result<String, EngineError> {
    let status = graph
        .status(status_id)
        .ok_or_else(|| GraphError::UnknownId(status_id.into()))?;
    Ok(match status.prompt.as_deref().map(str::trim) {
        Some(p) if !p.is_empty() => p.to_owned(),
        _ => format!("Is it true that: {}?", status.fact_text),
    })
}

/// Shared, immutable per-KB machinery. Sessions borrow it through an `Arc`.
#[derive(Debug)]
pub struct DialogueEngine {
    kb: KbDocument,
    matcher: Matcher,
    config: EngineConfig,
}

const NO_MATCH_MESSAGE: &str =
    "Sorry, I could not relate that to anything I know. Could you rephrase?";
const NOTHING_TO_EXPLAIN: &str = "I have not given you a reply yet, so there is nothing to explain. Tell me about your situation first.";
const NO_REPLY_MESSAGE: &str =
    "I cannot give you a reply that is consistent with what you told me.";

impl DialogueEngine {
    pub fn new(kb: KbDocument, config: EngineConfig) -> Result<Self, EngineError> {
        let matcher = Matcher::new(&kb.graph, &kb.intents_or_default(), config.matcher.clone())?;
        Ok(Self::with_matcher(kb, matcher, config))
    }

    /// Uses a prebuilt matcher, e.g. one backed by a custom provider.
    pub fn with_matcher(kb: KbDocument, matcher: Matcher, config: EngineConfig) -> Self {
        Self {
            kb,
            matcher,
            config,
        }
    }

    /// Validates a raw file first; any error makes the KB unusable.
    pub fn from_kb_file(file: KbFile, config: EngineConfig) -> Result<Self, EngineError> {
        let report = validate_kb(&file);
        if !report.is_ok() {
            return Err(EngineError::InvalidKb(report));
        }
        let kb = KbDocument::from_file(file).map_err(|_| EngineError::InvalidKb(report))?;
        Self::new(kb, config)
    }

    pub fn kb(&self) -> &KbDocument {
        &self.kb
    }

    pub fn graph(&self) -> &ArgumentationGraph {
        &self.kb.graph
    }

    pub fn matcher(&self) -> &Matcher {
        &self.matcher
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn greeting(&self) -> &str {
        self.kb
            .metadata
            .greeting
            .as_deref()
            .unwrap_or("Hello! Tell me about your situation and ask your question.")
    }

    pub fn start_session(self: &Arc<Self>) -> Session {
        Session {
            engine: Arc::clone(self),
            state: SessionState::default(),
        }
    }

    pub fn explanation_payload(&self, explanation: Explanation) -> ExplanationPayload {
        let graph = self.graph();
        let fact = |id: &ArgId| {
            graph
                .status(id.as_str())
                .map(|s| s.fact_text.clone())
                .unwrap_or_else(|| id.to_string())
        };
        let because: Vec<String> = explanation.supp.iter().map(fact).collect();
        let mut text = format!(
            "because: {}",
            if because.is_empty() {
                "(no supporting facts)".to_owned()
            } else {
                because.join(" and ")
            }
        );
        if !explanation.not_given.is_empty() {
            let parts: Vec<String> = explanation
                .not_given
                .iter()
                .map(|ng| {
                    let facts: Vec<String> = ng.attackers_in_s.iter().map(fact).collect();
                    let why = if facts.is_empty() {
                        match ng.reason {
                            crate::graph::WithheldReason::NotSelected => {
                                "another reply was preferred".to_owned()
                            }
                            _ => "not every objection to it has been ruled out".to_owned(),
                        }
                    } else {
                        format!("because {}", facts.join(" and "))
                    };
                    format!("{} ({why})", ng.reply_id)
                })
                .collect();
            text.push_str(&format!("; not given: {}", parts.join(", ")));
        }
        ExplanationPayload {
            explanation,
            because,
            text,
        }
    }
}

/// One conversation over a shared engine. Calls must be serialized by the
/// caller; the type is `Send` so it can move between threads between turns.
#[derive(Debug, Clone)]
pub struct Session {
    engine: Arc<DialogueEngine>,
    state: SessionState,
}

impl Session {
    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn engine(&self) -> &Arc<DialogueEngine> {
        &self.engine
    }

    pub fn phase(&self) -> Phase {
        self.state.phase
    }

    pub fn handle_utterance(&mut self, text: &str) -> Result<Vec<DialogueEvent>, EngineError> {
        if self.state.phase == Phase::Terminated {
            return Err(EngineError::SessionTerminated);
        }
        let mut events = Vec::new();
        match self.engine.matcher.detect_intent(text) {
            Intent::Stop => self.terminate(&mut events),
            Intent::Explain => match self.state.last_reply.clone() {
                Some(reply) => {
                    let explanation = self
                        .engine
                        .graph()
                        .explain(&self.state.activated, reply.as_str())?;
                    events.push(DialogueEvent::Explanation(
                        self.engine.explanation_payload(explanation),
                    ));
                }
                None => events.push(DialogueEvent::NoMatch {
                    message: NOTHING_TO_EXPLAIN.into(),
                }),
            },
            Intent::Statement => {
                let matched: Vec<ArgId> = self
                    .engine
                    .matcher
                    .compute_matches(text)
                    .into_iter()
                    .map(|m| m.status_id)
                    .collect();
                let Some(admitted) = self.admit(matched, &mut events) else {
                    return Ok(events);
                };
                match self.state.phase {
                    Phase::AwaitingInput => self.new_query_turn(admitted, &mut events)?,
                    Phase::Eliciting => self.elicitation_step(admitted, &mut events)?,
                    Phase::Terminated => unreachable!("checked on entry"),
                }
            }
        }
        Ok(events)
    }

    fn terminate(&mut self, events: &mut Vec<DialogueEvent>) {
        self.state.phase = Phase::Terminated;
        self.state.candidate = None;
        self.state.pending_prompts.clear();
        events.push(DialogueEvent::Terminated);
    }

    /// Applies the conflict policy to freshly matched facts. `None` means
    /// the session was terminated.
    fn admit(
        &mut self,
        matched: Vec<ArgId>,
        events: &mut Vec<DialogueEvent>,
    ) -> Option<ActivatedSet> {
        let graph = self.engine.graph();
        let mut admitted = ActivatedSet::new();
        let mut dropped = Vec::new();
        let mut conflicts_with: BTreeSet<ArgId> = BTreeSet::new();
        for m in matched {
            let known = self
                .state
                .activated
                .iter()
                .chain(self.state.n_new.iter())
                .chain(admitted.iter());
            let rivals: Vec<ArgId> = known
                .filter(|k| graph.in_conflict(k.as_str(), m.as_str()))
                .cloned()
                .collect();
            if rivals.is_empty() {
                admitted.insert(m);
                continue;
            }
            match self.engine.config.conflict_policy {
                ConflictPolicy::KeepFirst | ConflictPolicy::Terminate => {
                    conflicts_with.extend(rivals);
                    dropped.push(m);
                }
                ConflictPolicy::KeepLatest => {
                    for old in &rivals {
                        self.state.activated.remove(old.as_str());
                        self.state.n_new.remove(old.as_str());
                        admitted.remove(old.as_str());
                    }
                    dropped.extend(rivals.iter().cloned());
                    conflicts_with.insert(m.clone());
                    admitted.insert(m);
                }
            }
        }
        if !dropped.is_empty() {
            events.push(DialogueEvent::ConflictDropped {
                dropped,
                conflicts_with: conflicts_with.into_iter().collect(),
            });
            if self.engine.config.conflict_policy == ConflictPolicy::Terminate {
                self.terminate(events);
                return None;
            }
        }
        Some(admitted)
    }

    fn new_query_turn(
        &mut self,
        new: ActivatedSet,
        events: &mut Vec<DialogueEvent>,
    ) -> Result<(), EngineError> {
        if new.is_empty() {
            events.push(DialogueEvent::NoMatch {
                message: NO_MATCH_MESSAGE.into(),
            });
            return Ok(());
        }
        self.state.activated.extend_from(&new);
        self.state.excluded.clear();
        let classification = self
            .engine
            .graph()
            .classify_replies(&self.state.activated, &new)?;
        self.choose(classification, events)
    }

    fn elicitation_step(
        &mut self,
        answers: ActivatedSet,
        events: &mut Vec<DialogueEvent>,
    ) -> Result<(), EngineError> {
        self.state.n_new.extend_from(&answers);
        if self.emit_next_prompt(events)? {
            return Ok(());
        }
        let n_new = std::mem::take(&mut self.state.n_new);
        self.state.activated.extend_from(&n_new);
        let candidate = self
            .state
            .candidate
            .clone()
            .expect("candidate is set while eliciting");
        let graph = self.engine.graph();
        if graph.set_supports(&self.state.activated, candidate.as_str())?
            && graph.is_acceptable(&self.state.activated, candidate.as_str())?
        {
            self.give_reply(candidate, events);
            return Ok(());
        }
        self.state.excluded.insert(candidate);
        let classification = graph.classify_replies(&self.state.activated, &n_new)?;
        self.choose(classification, events)
    }

    /// Answers from `cons` if possible, otherwise starts a round of prompts
    /// for the best potentially consistent reply that still has something
    /// to ask, otherwise gives up.
    fn choose(
        &mut self,
        classification: ReplyClassification,
        events: &mut Vec<DialogueEvent>,
    ) -> Result<(), EngineError> {
        let graph = self.engine.graph();
        let cons: BTreeSet<ArgId> = classification
            .cons
            .difference(&self.state.excluded)
            .cloned()
            .collect();
        if !cons.is_empty() {
            let reply = select_candidate_reply(graph, &cons, &self.state.activated)?;
            self.give_reply(reply, events);
            return Ok(());
        }

        let mut askable = BTreeSet::new();
        for reply in classification.pcons.difference(&self.state.excluded) {
            let pending = self.fresh_defenders(reply)?;
            if !pending.is_empty() {
                askable.insert(reply.clone());
            }
        }
        if askable.is_empty() {
            events.push(DialogueEvent::NoReplyPossible {
                message: NO_REPLY_MESSAGE.into(),
            });
            self.terminate(events);
            return Ok(());
        }
        let candidate = select_candidate_reply(graph, &askable, &self.state.activated)?;
        self.state.pending_prompts = self.fresh_defenders(&candidate)?.into();
        self.state.candidate = Some(candidate);
        self.state.n_new = ActivatedSet::new();
        self.state.phase = Phase::Eliciting;
        let prompted = self.emit_next_prompt(events)?;
        debug_assert!(prompted, "askable candidates have a fresh prompt");
        Ok(())
    }

    fn fresh_defenders(&self, reply: &ArgId) -> Result<Vec<ArgId>, EngineError> {
        Ok(self
            .engine
            .graph()
            .defence_candidates(&self.state.activated, reply.as_str())?
            .into_iter()
            .filter(|d| !self.state.asked.contains(d.as_str()))
            .collect())
    }

    /// Pops the next pending prompt whose fact is not already known.
    fn emit_next_prompt(&mut self, events: &mut Vec<DialogueEvent>) -> Result<bool, EngineError> {
        while let Some(next) = self.state.pending_prompts.pop_front() {
            if self.state.n_new.contains(next.as_str())
                || self.state.activated.contains(next.as_str())
                || self.state.asked.contains(next.as_str())
            {
                continue;
            }
            let text = prompt_text_for(self.engine.graph(), next.as_str())?;
            self.state.asked.insert(next.clone());
            events.push(DialogueEvent::Prompt {
                status_id: next,
                text,
            });
            return Ok(true);
        }
        Ok(false)
    }

    fn give_reply(&mut self, reply: ArgId, events: &mut Vec<DialogueEvent>) {
        let text = self
            .engine
            .graph()
            .reply(reply.as_str())
            .map(|r| r.reply_text.clone())
            .unwrap_or_default();
        self.state.last_reply = Some(reply.clone());
        self.state.phase = Phase::AwaitingInput;
        self.state.candidate = None;
        self.state.pending_prompts.clear();
        self.state.n_new = ActivatedSet::new();
        events.push(DialogueEvent::ReplyGiven {
            reply_id: reply,
            text,
        });
    }
}
