//! Argumentation-backed dialogue: graph reasoning, knowledge bases,
//! utterance matching and the turn-based dialogue engine.

pub mod engine;
pub mod graph;
pub mod id;
pub mod kb;
pub mod matcher;
pub mod oracle;
pub mod transcript;

pub use engine::{
    ConflictPolicy, DialogueEngine, DialogueEvent, EngineConfig, EngineError, EventKind, Phase,
    Session, SessionState,
};
pub use graph::{
    ActivatedSet, ArgumentationGraph, Explanation, GraphError, NotGiven, ReplyArgument,
    ReplyClassification, StatusArgument, WithheldReason,
};
pub use id::ArgId;
pub use kb::{KbDocument, KbError, KbFile, ValidationReport};
pub use matcher::{Matcher, MatcherConfig, Measure};
