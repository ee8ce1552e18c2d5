//! Language module: maps utterances onto status arguments and classifies
//! utterance intent.
//!
//! Each status node is scored by the best similarity between the utterance
//! and any of its annotation sentences. Nodes at or above the threshold are
//! activated, subject to an exclusivity rule for mutually attacking pairs:
//! a node survives only if it beats every mutual attacker by more than
//! `exclusive_margin`.

mod provider;
mod vector;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use provider::{
    EmbeddingProvider, HttpEmbeddingProvider, ProviderConfig, ProviderError, embed_with_provider,
};
pub use vector::{
    Feature, Measure, SentenceVector, bray_curtis_sim, cosine_sim, normalize, vectorize,
};

use crate::graph::ArgumentationGraph;
use crate::id::ArgId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatcherError {
    #[error("threshold must lie in [0, 1], got {0}")]
    InvalidThreshold(f64),
    #[error("exclusive margin must be nonnegative, got {0}")]
    InvalidMargin(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatcherConfig {
    pub threshold: f64,
    pub measure: Measure,
    pub exclusive_margin: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provider: Option<ProviderConfig>,
}

impl Default for MatcherConfig {
    fn default() -> Self {
        Self {
            threshold: 0.55,
            measure: Measure::BrayCurtis,
            exclusive_margin: 0.02,
            provider: None,
        }
    }
}

impl MatcherConfig {
    pub fn validate(&self) -> Result<(), MatcherError> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(MatcherError::InvalidThreshold(self.threshold));
        }
        if self.exclusive_margin.is_nan() || self.exclusive_margin < 0.0 {
            return Err(MatcherError::InvalidMargin(self.exclusive_margin));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub status_id: ArgId,
    pub score: f64,
    pub matched_annotation: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Intent {
    Statement,
    Stop,
    Explain,
}

/// Phrase lists for the stop and explanation-request intents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntentPhrases {
    pub stop: Vec<String>,
    pub explain: Vec<String>,
}

impl Default for IntentPhrases {
    fn default() -> Self {
        Self {
            stop: ["bye", "goodbye", "quit", "stop", "thanks, that's all"]
                .map(String::from)
                .to_vec(),
            explain: [
                "why?",
                "why not?",
                "explain",
                "can you explain that?",
                "how did you decide?",
            ]
            .map(String::from)
            .to_vec(),
        }
    }
}

/// Result of a matching pass. `fallback` is set when the embedding provider
/// failed and the lexical vectors were used instead.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchOutcome {
    pub matches: Vec<MatchResult>,
    pub fallback: Option<ProviderError>,
}

struct NodeIndex {
    id: ArgId,
    annotations: Vec<String>,
    lexical: Vec<SentenceVector>,
    /// Indices of nodes this one mutually attacks.
    rivals: Vec<usize>,
}

struct DenseIndex {
    provider: Box<dyn EmbeddingProvider>,
    /// Per node, per annotation.
    vectors: Vec<Vec<SentenceVector>>,
}

/// Precomputed annotation vectors for one graph.
pub struct Matcher {
    config: MatcherConfig,
    nodes: Vec<NodeIndex>,
    dense: Option<DenseIndex>,
    stop: Vec<SentenceVector>,
    explain: Vec<SentenceVector>,
}

impl std::fmt::Debug for Matcher {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Matcher")
            .field("config", &self.config)
            .field("nodes", &self.nodes.len())
            .field("dense", &self.dense.is_some())
            .finish()
    }
}

impl Matcher {
    /// Lexical matcher; a configured provider is connected over HTTP.
    pub fn new(
        graph: &ArgumentationGraph,
        intents: &IntentPhrases,
        config: MatcherConfig,
    ) -> Result<Self, MatcherError> {
        let provider = config
            .provider
            .as_ref()
            .map(|p| Box::new(HttpEmbeddingProvider::new(p)) as Box<dyn EmbeddingProvider>);
        Self::with_provider(graph, intents, config, provider)
    }

    pub fn with_provider(
        graph: &ArgumentationGraph,
        intents: &IntentPhrases,
        config: MatcherConfig,
        provider: Option<Box<dyn EmbeddingProvider>>,
    ) -> Result<Self, MatcherError> {
        config.validate()?;
        let statuses: Vec<_> = graph.statuses().collect();
        let position: BTreeMap<&ArgId, usize> = statuses
            .iter()
            .enumerate()
            .map(|(i, s)| (&s.id, i))
            .collect();
        let nodes: Vec<NodeIndex> = statuses
            .iter()
            .map(|s| NodeIndex {
                id: s.id.clone(),
                annotations: s.annotations.clone(),
                lexical: s.annotations.iter().map(|a| vectorize(a)).collect(),
                rivals: graph
                    .attackers_of(s.id.as_str())
                    .filter(|other| graph.attacks_edge(s.id.as_str(), other.as_str()))
                    .filter_map(|other| position.get(other).copied())
                    .collect(),
            })
            .collect();

        let dense = provider.and_then(|provider| {
            let texts: Vec<String> = nodes.iter().flat_map(|n| n.annotations.clone()).collect();
            match provider.embed(&texts) {
                Ok(flat) => {
                    let mut it = flat.into_iter();
                    let vectors = nodes
                        .iter()
                        .map(|n| {
                            (&mut it)
                                .take(n.annotations.len())
                                .map(|v| SentenceVector::from_dense(&v))
                                .collect()
                        })
                        .collect();
                    Some(DenseIndex { provider, vectors })
                }
                Err(err) => {
                    tracing::warn!(error = %err, "annotation embedding failed; using lexical vectors");
                    None
                }
            }
        });

        Ok(Self {
            config,
            nodes,
            dense,
            stop: intents.stop.iter().map(|p| vectorize(p)).collect(),
            explain: intents.explain.iter().map(|p| vectorize(p)).collect(),
        })
    }

    pub fn config(&self) -> &MatcherConfig {
        &self.config
    }

    pub fn uses_provider(&self) -> bool {
        self.dense.is_some()
    }

    /// Best score per node, as `(score, annotation index)`.
    fn scores(&self, utterance: &str) -> (Vec<(f64, usize)>, Option<ProviderError>) {
        let best = |sims: &mut dyn Iterator<Item = f64>| {
            sims.enumerate().fold(
                (0.0_f64, 0_usize),
                |acc, (i, s)| {
                    if s > acc.0 { (s, i) } else { acc }
                },
            )
        };
        if let Some(dense) = &self.dense {
            match embed_with_provider(utterance, dense.provider.as_ref()) {
                Ok(u) => {
                    let scores = dense
                        .vectors
                        .iter()
                        .map(|anns| best(&mut anns.iter().map(|a| cosine_sim(&u, a))))
                        .collect();
                    return (scores, None);
                }
                Err(err) => {
                    tracing::warn!(error = %err, "utterance embedding failed; using lexical vectors");
                    let lexical = self.lexical_scores(utterance);
                    return (lexical, Some(err));
                }
            }
        }
        (self.lexical_scores(utterance), None)
    }

    fn lexical_scores(&self, utterance: &str) -> Vec<(f64, usize)> {
        let u = vectorize(utterance);
        let measure = self.config.measure;
        self.nodes
            .iter()
            .map(|n| {
                n.lexical
                    .iter()
                    .enumerate()
                    .fold((0.0_f64, 0_usize), |acc, (i, a)| {
                        let s = measure.similarity(&u, a);
                        if s > acc.0 { (s, i) } else { acc }
                    })
            })
            .collect()
    }

    /// Activated status nodes for `utterance`, highest score first.
    pub fn compute_matches(&self, utterance: &str) -> Vec<MatchResult> {
        self.compute_matches_detailed(utterance).matches
    }

    pub fn compute_matches_detailed(&self, utterance: &str) -> MatchOutcome {
        if normalize(utterance).is_empty() {
            return MatchOutcome {
                matches: Vec::new(),
                fallback: None,
            };
        }
        let (scores, fallback) = self.scores(utterance);
        let margin = self.config.exclusive_margin;
        let mut matches: Vec<MatchResult> = self
            .nodes
            .iter()
            .zip(&scores)
            .filter(|(_, (score, _))| *score > 0.0 && *score >= self.config.threshold)
            .filter(|(node, (score, _))| node.rivals.iter().all(|&r| *score - scores[r].0 > margin))
            .map(|(node, (score, ann))| MatchResult {
                status_id: node.id.clone(),
                score: *score,
                matched_annotation: node.annotations[*ann].clone(),
            })
            .collect();
        matches.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| a.status_id.cmp(&b.status_id))
        });
        MatchOutcome { matches, fallback }
    }

    /// Highest-scoring intent class if it reaches the threshold.
    pub fn detect_intent(&self, utterance: &str) -> Intent {
        let u = vectorize(utterance);
        if u.is_empty() {
            return Intent::Statement;
        }
        let measure = self.config.measure;
        let best = |phrases: &[SentenceVector]| {
            phrases
                .iter()
                .map(|p| measure.similarity(&u, p))
                .fold(0.0_f64, f64::max)
        };
        let stop = best(&self.stop);
        let explain = best(&self.explain);
        let (intent, score) = if explain > stop {
            (Intent::Explain, explain)
        } else {
            (Intent::Stop, stop)
        };
        if score > 0.0 && score >= self.config.threshold {
            intent
        } else {
            Intent::Statement
        }
    }
}

/// One-shot matching without keeping the precomputed index around.
pub fn compute_matches(
    utterance: &str,
    graph: &ArgumentationGraph,
    config: &MatcherConfig,
) -> Result<Vec<MatchResult>, MatcherError> {
    let matcher = Matcher::new(graph, &IntentPhrases::default(), config.clone())?;
    Ok(matcher.compute_matches(utterance))
}
