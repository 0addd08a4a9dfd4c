//! Intent intake: embedding, clustering into task sub-domains, and rule-based
//! parsing into objectives and numeric constraints.

mod cluster;
mod embed;
mod parse;

pub use cluster::{cluster_intents, kmeans, IntentCluster};
pub use embed::{embed_intent, fnv1a64, Embedder, HashedBagOfWords, HttpEmbedder, HASHED_DIM};
pub use parse::{parse_intent, Objective, ParsedIntent};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::http::TransportError;

/// The administrator intent of the UAV case study.
pub const CASE_STUDY_INTENT: &str = "Deploy a UAV base station that maximizes both coverage and user data rates.";

/// Default number of intent clusters (performance / fault / security / other).
pub const DEFAULT_CLUSTERS: usize = 4;

#[derive(Debug, Error)]
pub enum IntentError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no objective keyword recognized in intent {0:?}")]
    UnrecognizedIntent(String),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("embedding endpoint reply is malformed: {0}")]
    MalformedReply(String),
}

pub type Result<T> = std::result::Result<T, IntentError>;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntentText {
    pub id: u32,
    pub text: String,
}

impl IntentText {
    pub fn new(id: u32, text: impl Into<String>) -> Result<Self> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(IntentError::Domain("intent text is empty".into()));
        }
        Ok(Self { id, text })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentEmbedding {
    pub id: u32,
    pub vector: Vec<f64>,
    pub dim: usize,
}

impl IntentEmbedding {
    /// Unit-normalizes `vector`; a zero vector is a domain error.
    pub fn normalized(id: u32, mut vector: Vec<f64>) -> Result<Self> {
        let norm = vector.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(IntentError::Domain(format!("embedding for intent {id} has zero or non-finite norm")));
        }
        vector.iter_mut().for_each(|v| *v /= norm);
        Ok(Self { id, dim: vector.len(), vector })
    }

    /// Wraps a vector as-is, without normalization.
    pub fn raw(id: u32, vector: Vec<f64>) -> Self {
        Self { id, dim: vector.len(), vector }
    }

    pub fn cosine(&self, other: &IntentEmbedding) -> f64 {
        let dot: f64 = self.vector.iter().zip(&other.vector).map(|(a, b)| a * b).sum();
        let na = self.vector.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nb = other.vector.iter().map(|v| v * v).sum::<f64>().sqrt();
        dot / (na * nb)
    }
}

/// A small built-in corpus spanning the four default task families. The
/// case-study intent is entry 0.
pub fn builtin_corpus() -> Vec<IntentText> {
    [
        CASE_STUDY_INTENT,
        "Maximize throughput and coverage for users in the downtown area.",
        "Improve coverage for users at the cell edge.",
        "Increase the sum rate of the UAV network.",
        "Detect and recover from link failures with low latency.",
        "Reduce the delay experienced after a base station outage.",
        "Restore coverage quickly after a UAV fault.",
        "Monitor the network for jamming and suspicious interference.",
        "Detect unauthorized transmitters near the base station.",
        "Reduce energy use of the UAV fleet.",
        "Minimize power consumption while keeping at least 90% coverage.",
        "Lower transmit power to at most 15 dBm to save energy.",
    ]
    .into_iter()
    .enumerate()
    .map(|(i, t)| IntentText { id: i as u32, text: t.to_string() })
    .collect()
}

/// Cluster index assigned to `intent` when clustered together with `corpus`.
pub fn categorize(
    intent: &IntentText,
    corpus: &[IntentText],
    embedder: &dyn Embedder,
    k: usize,
    seed: u64,
) -> Result<usize> {
    let mut texts: Vec<IntentText> = corpus.iter().filter(|t| t.text != intent.text).cloned().collect();
    let next_id = texts.iter().map(|t| t.id).max().map_or(0, |m| m + 1).max(intent.id);
    let probe = IntentText { id: next_id, text: intent.text.clone() };
    texts.push(probe);
    let embeddings = embedder.embed_batch(&texts)?;
    let clusters = cluster_intents(&embeddings, k.min(texts.len()), seed, 100)?;
    Ok(*clusters.assignments.last().expect("probe was pushed"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_rejected() {
        assert!(IntentText::new(0, "   \t").is_err());
        assert!(IntentText::new(0, "ok").is_ok());
    }

    #[test]
    fn corpus_parse_is_total() {
        for t in builtin_corpus() {
            match parse_intent(&t, 0) {
                Ok(p) => assert!(!p.objectives.is_empty()),
                Err(IntentError::UnrecognizedIntent(_)) => {}
                Err(e) => panic!("unexpected error {e}"),
            }
        }
    }

    #[test]
    fn categorize_is_deterministic_and_in_range() {
        let corpus = builtin_corpus();
        let e = HashedBagOfWords::default();
        let intent = IntentText::new(0, CASE_STUDY_INTENT).unwrap();
        let a = categorize(&intent, &corpus, &e, DEFAULT_CLUSTERS, 1).unwrap();
        assert_eq!(a, categorize(&intent, &corpus, &e, DEFAULT_CLUSTERS, 1).unwrap());
        assert!(a < DEFAULT_CLUSTERS);
    }
}
