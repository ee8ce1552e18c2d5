//! Out-of-process embedding providers.
//!
//! Protocol: `POST {"texts": [...]}` answered by `{"vectors": [[...], ...]}`,
//! one vector per input text, in order.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::vector::SentenceVector;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProviderError {
    #[error("embedding provider unreachable: {0}")]
    Unreachable(String),
    #[error("embedding provider returned a malformed response: {0}")]
    MalformedResponse(String),
}

pub trait EmbeddingProvider: Send + Sync {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub url: String,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
}

fn default_timeout_ms() -> u64 {
    2_000
}

impl ProviderConfig {
    pub fn new(url: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            timeout_ms: default_timeout_ms(),
        }
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

pub struct HttpEmbeddingProvider {
    url: String,
    agent: ureq::Agent,
}

impl HttpEmbeddingProvider {
    pub fn new(config: &ProviderConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .build()
            .into();
        Self {
            url: config.url.clone(),
            agent,
        }
    }
}

impl EmbeddingProvider for HttpEmbeddingProvider {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
        let body = serde_json::to_string(&EmbedRequest { texts })
            .map_err(|e| ProviderError::MalformedResponse(e.to_string()))?;
        let mut response = self
            .agent
            .post(&self.url)
            .header("content-type", "application/json")
            .send(body)
            .map_err(|e| ProviderError::Unreachable(e.to_string()))?;
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| ProviderError::Unreachable(e.to_string()))?;
        parse_response(&text, texts.len())
    }
}

fn parse_response(text: &str, expected: usize) -> Result<Vec<Vec<f64>>, ProviderError> {
    let parsed: EmbedResponse =
        serde_json::from_str(text).map_err(|e| ProviderError::MalformedResponse(e.to_string()))?;
    if parsed.vectors.len() != expected {
        return Err(ProviderError::MalformedResponse(format!(
            "expected {expected} vectors, got {}",
            parsed.vectors.len()
        )));
    }
    if parsed
        .vectors
        .iter()
        .any(|v| v.iter().any(|x| !x.is_finite()))
    {
        return Err(ProviderError::MalformedResponse(
            "non-finite component".into(),
        ));
    }
    Ok(parsed.vectors)
}

/// Embeds a single text through `provider`.
pub fn embed_with_provider(
    text: &str,
    provider: &dyn EmbeddingProvider,
) -> Result<SentenceVector, ProviderError> {
    let mut vectors = provider.embed(&[text.to_owned()])?;
    match vectors.pop() {
        Some(v) if vectors.is_empty() => Ok(SentenceVector::from_dense(&v)),
        _ => Err(ProviderError::MalformedResponse(
            "expected exactly one vector".into(),
        )),
    }
}
