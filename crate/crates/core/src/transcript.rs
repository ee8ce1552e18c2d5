//! Scripted conversations and their replay.
//!
//! ```text
//! # comment
//! U: user utterance
//! E: PROMPT N7
//! E: REPLY_GIVEN R2
//! ```
//!
//! Each `E:` line names the kind of the next emitted event and optionally a
//! substring its payload must contain. Every emitted event must be expected.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::engine::{DialogueEngine, DialogueEvent, EventKind};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct TranscriptError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    User(String),
    Expect {
        kind: EventKind,
        contains: Option<String>,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    /// Steps with their 1-based source line.
    pub steps: Vec<(usize, Step)>,
}

impl Transcript {
    pub fn parse(text: &str) -> Result<Self, TranscriptError> {
        let mut steps = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let err = |message: String| TranscriptError { line, message };
            if let Some(rest) = trimmed.strip_prefix("U:") {
                steps.push((line, Step::User(rest.trim().to_owned())));
            } else if let Some(rest) = trimmed.strip_prefix("E:") {
                let rest = rest.trim();
                let (kind, contains) = match rest.split_once(char::is_whitespace) {
                    Some((k, c)) => (k, Some(c.trim().to_owned())),
                    None => (rest, None),
                };
                if kind.is_empty() {
                    return Err(err("missing event kind".into()));
                }
                let kind = kind.parse::<EventKind>().map_err(err)?;
                steps.push((line, Step::Expect { kind, contains }));
            } else {
                return Err(err(format!(
                    "expected `U:`, `E:` or `#`, found `{}`",
                    trimmed.chars().take(20).collect::<String>()
                )));
            }
        }
        Ok(Self { steps })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Divergence {
    pub line: usize,
    pub expected: String,
    pub actual: String,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "line {}: expected {}, got {}",
            self.line, self.expected, self.actual
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayReport {
    pub events: Vec<DialogueEvent>,
    pub divergence: Option<Divergence>,
}

impl ReplayReport {
    pub fn passed(&self) -> bool {
        self.divergence.is_none()
    }
}

fn describe(event: &DialogueEvent) -> String {
    let payload = event.payload_text();
    if payload.is_empty() {
        event.kind().to_string()
    } else {
        format!("{} {payload}", event.kind())
    }
}

/// Runs the transcript in a fresh session and stops at the first divergence.
pub fn replay(engine: &Arc<DialogueEngine>, transcript: &Transcript) -> ReplayReport {
    let mut session = engine.start_session();
    let mut events = Vec::new();
    let mut cursor = 0;
    let mut last_line = 0;
    let diverge =
        |events: Vec<DialogueEvent>, line, expected: String, actual: String| ReplayReport {
            events,
            divergence: Some(Divergence {
                line,
                expected,
                actual,
            }),
        };

    for (line, step) in &transcript.steps {
        last_line = *line;
        match step {
            Step::User(text) => {
                if let Some(extra) = events.get(cursor) {
                    let actual = describe(extra);
                    return diverge(events, *line, "no further events".into(), actual);
                }
                match session.handle_utterance(text) {
                    Ok(new) => events.extend(new),
                    Err(e) => {
                        return diverge(
                            events,
                            *line,
                            "an accepted utterance".into(),
                            e.to_string(),
                        );
                    }
                }
            }
            Step::Expect { kind, contains } => {
                let expected = match contains {
                    Some(c) => format!("{kind} containing `{c}`"),
                    None => kind.to_string(),
                };
                let Some(actual) = events.get(cursor) else {
                    return diverge(events, *line, expected, "no event".into());
                };
                let ok = actual.kind() == *kind
                    && contains
                        .as_deref()
                        .is_none_or(|c| actual.payload_text().contains(c));
                if !ok {
                    let actual = describe(actual);
                    return diverge(events, *line, expected, actual);
                }
                cursor += 1;
            }
        }
    }
    if let Some(extra) = events.get(cursor) {
        let actual = describe(extra);
        return diverge(events, last_line, "no further events".into(), actual);
    }
    ReplayReport {
        events,
        divergence: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::EngineConfig;
    use crate::kb::builtin_case_study_kb;

    const HAPPY: &str = include_str!("../fixtures/case_study_happy.txt");
    const ASTHMA: &str = include_str!("../fixtures/case_study_asthma.txt");

    fn engine() -> Arc<DialogueEngine> {
        Arc::new(DialogueEngine::new(builtin_case_study_kb(), EngineConfig::default()).unwrap())
    }

    #[test]
    fn parses_steps_and_comments() {
        let t = Transcript::parse("# hi\n\nU: hello\nE: PROMPT N7\nE: TERMINATED\n").unwrap();
        assert_eq!(t.steps.len(), 3);
        assert_eq!(t.steps[0], (3, Step::User("hello".into())));
        assert_eq!(
            t.steps[1].1,
            Step::Expect {
                kind: EventKind::Prompt,
                contains: Some("N7".into())
            }
        );
    }

    #[test]
    fn malformed_lines_are_rejected() {
        assert_eq!(Transcript::parse("U: a\nX: b").unwrap_err().line, 2);
        assert_eq!(Transcript::parse("E: REPLY").unwrap_err().line, 1);
        assert!(Transcript::parse("E:").is_err());
    }

    #[test]
    fn fixtures_replay() {
        for src in [HAPPY, ASTHMA] {
            let report = replay(&engine(), &Transcript::parse(src).unwrap());
            assert!(report.passed(), "{:?}", report.divergence);
        }
    }

    #[test]
    fn first_divergence_is_reported() {
        let t = Transcript::parse(
            "U: I suffer from latex allergy\nE: PROMPT N16\nU: bye\nE: TERMINATED",
        )
        .unwrap();
        let report = replay(&engine(), &t);
        let d = report.divergence.unwrap();
        assert_eq!(d.line, 2);
        assert!(d.actual.starts_with("PROMPT N7"), "{}", d.actual);
    }

    #[test]
    fn unexpected_events_fail() {
        let t = Transcript::parse("U: I suffer from latex allergy").unwrap();
        let report = replay(&engine(), &t);
        assert_eq!(report.divergence.unwrap().expected, "no further events");
    }
}
