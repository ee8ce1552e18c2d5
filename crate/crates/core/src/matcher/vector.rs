//! Lexical sentence vectors and the two similarity measures.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Feature {
    Word(String),
    Trigram(String),
    /// Component of a dense embedding.
    Dim(usize),
}

/// Sparse feature-weight map. Lexical vectors have nonnegative counts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SentenceVector {
    weights: BTreeMap<Feature, f64>,
}

impl SentenceVector {
    pub fn from_dense(values: &[f64]) -> Self {
        Self {
            weights: values
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (Feature::Dim(i), *v))
                .collect(),
        }
    }

    pub fn from_weights(weights: impl IntoIterator<Item = (Feature, f64)>) -> Self {
        let mut out = Self::default();
        for (f, w) in weights {
            out.add(f, w);
        }
        out
    }

    fn add(&mut self, feature: Feature, weight: f64) {
        *self.weights.entry(feature).or_insert(0.0) += weight;
    }

    pub fn get(&self, feature: &Feature) -> f64 {
        self.weights.get(feature).copied().unwrap_or(0.0)
    }

    pub fn word(&self, word: &str) -> f64 {
        self.get(&Feature::Word(word.to_owned()))
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Feature, &f64)> {
        self.weights.iter()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Measure {
    #[default]
    BrayCurtis,
    Cosine,
}

impl Measure {
    pub fn similarity(self, u: &SentenceVector, v: &SentenceVector) -> f64 {
        match self {
            Measure::BrayCurtis => bray_curtis_sim(u, v),
            Measure::Cosine => cosine_sim(u, v),
        }
    }
}

impl std::str::FromStr for Measure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bray-curtis" => Ok(Measure::BrayCurtis),
            "cosine" => Ok(Measure::Cosine),
            other => Err(format!(
                "unknown measure `{other}` (expected bray-curtis or cosine)"
            )),
        }
    }
}

/// Lowercase, punctuation to spaces, whitespace collapsed.
pub fn normalize(text: &str) -> String {
    let mapped: String = text
        .chars()
        .flat_map(char::to_lowercase)
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    mapped.split_whitespace().collect::<Vec<_>>().join(" ")
}

const BOUNDARY: char = '#';

/// Word unigrams plus boundary-padded character trigrams of every word.
pub fn vectorize(text: &str) -> SentenceVector {
    let mut out = SentenceVector::default();
    for word in normalize(text).split(' ').filter(|w| !w.is_empty()) {
        out.add(Feature::Word(word.to_owned()), 1.0);
        let padded: Vec<char> = std::iter::once(BOUNDARY)
            .chain(word.chars())
            .chain(std::iter::once(BOUNDARY))
            .collect();
        for tri in padded.windows(3) {
            out.add(Feature::Trigram(tri.iter().collect()), 1.0);
        }
    }
    out
}

fn union_features<'a>(
    u: &'a SentenceVector,
    v: &'a SentenceVector,
) -> impl Iterator<Item = (f64, f64)> + 'a {
    let left = u.weights.iter().map(move |(f, a)| (*a, v.get(f)));
    let right = v
        .weights
        .iter()
        .filter(move |(f, _)| !u.weights.contains_key(*f))
        .map(|(_, b)| (0.0, *b));
    left.chain(right)
}

/// `1 - sum|u_i - v_i| / sum(u_i + v_i)`; zero when both are empty.
pub fn bray_curtis_sim(u: &SentenceVector, v: &SentenceVector) -> f64 {
    let (diff, total) =
        union_features(u, v).fold((0.0, 0.0), |(d, t), (a, b)| (d + (a - b).abs(), t + a + b));
    if total <= 0.0 {
        return 0.0;
    }
    (1.0 - diff / total).clamp(0.0, 1.0)
}

/// Normalized dot product; zero when either vector is empty.
pub fn cosine_sim(u: &SentenceVector, v: &SentenceVector) -> f64 {
    if u.is_empty() || v.is_empty() {
        return 0.0;
    }
    let (dot, nu, nv) = union_features(u, v).fold((0.0, 0.0, 0.0), |(d, x, y), (a, b)| {
        (d + a * b, x + a * a, y + b * b)
    });
    if nu <= 0.0 || nv <= 0.0 {
        return 0.0;
    }
    (dot / (nu.sqrt() * nv.sqrt())).clamp(0.0, 1.0)
}
