//! Intent embedders.
//!
//! The offline default is feature hashing: lowercase, split on
//! non-alphanumeric characters, hash every token with 64-bit FNV-1a, add
//! `+1` to bucket `h mod 256` when `h` has an even number of set bits and
//! `-1` otherwise, then L2-normalize. Rust's `to_lowercase` and
//! `is_alphanumeric` are Unicode-table based, so the result does not depend
//! on locale or platform.

use std::time::Duration;

use serde_json::{json, Value};

use super::{IntentEmbedding, IntentError, IntentText, Result};
use crate::http::{join_url, JsonClient};

pub const HASHED_DIM: usize = 256;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

pub trait Embedder: Send + Sync {
    fn id(&self) -> String;

    /// One unit-norm embedding per input, in input order, ids carried over.
    fn embed_batch(&self, texts: &[IntentText]) -> Result<Vec<IntentEmbedding>>;
}

pub fn embed_intent(text: &IntentText, embedder: &dyn Embedder) -> Result<IntentEmbedding> {
    let mut out = embedder.embed_batch(std::slice::from_ref(text))?;
    out.pop().ok_or_else(|| IntentError::MalformedReply("embedder returned no vector".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashedBagOfWords {
    pub dim: usize,
}

impl Default for HashedBagOfWords {
    fn default() -> Self {
        Self { dim: HASHED_DIM }
    }
}

impl HashedBagOfWords {
    /// The un-normalized hashed count vector.
    pub fn raw_vector(&self, text: &str) -> Result<Vec<f64>> {
        let lower = text.to_lowercase();
        let mut v = vec![0.0; self.dim];
        let mut tokens = 0;
        for tok in lower.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()) {
            let h = fnv1a64(tok.as_bytes());
            let sign = if h.count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
            v[(h % self.dim as u64) as usize] += sign;
            tokens += 1;
        }
        if tokens == 0 {
            return Err(IntentError::Domain(format!("no tokens in intent {text:?}")));
        }
        Ok(v)
    }
}

impl Embedder for HashedBagOfWords {
    fn id(&self) -> String {
        format!("hashed-bow-{}", self.dim)
    }

    fn embed_batch(&self, texts: &[IntentText]) -> Result<Vec<IntentEmbedding>> {
        texts.iter().map(|t| IntentEmbedding::normalized(t.id, self.raw_vector(&t.text)?)).collect()
    }
}

/// Client for an OpenAI-compatible `/v1/embeddings` endpoint.
#[derive(Debug, Clone)]
pub struct HttpEmbedder {
    base_url: String,
    model: String,
    client: JsonClient,
    /// Inputs per request.
    pub batch_size: usize,
    /// Requests allowed in flight at once.
    pub max_in_flight: usize,
}

impl HttpEmbedder {
    pub fn new(
        base_url: impl Into<String>,
        api_key: Option<String>,
        model: impl Into<String>,
        timeout: Duration,
        retries: u32,
    ) -> Result<Self> {
        Ok(Self {
            base_url: base_url.into(),
            model: model.into(),
            client: JsonClient::new(api_key, timeout, retries)?,
            batch_size: 16,
            max_in_flight: 4,
        })
    }

    fn embed_chunk(&self, chunk: &[IntentText]) -> Result<Vec<IntentEmbedding>> {
        let body = json!({
            "model": self.model,
            "input": chunk.iter().map(|t| t.text.as_str()).collect::<Vec<_>>(),
        });
        let reply = self.client.post(&join_url(&self.base_url, "v1/embeddings"), &body)?;
        let data = reply
            .get("data")
            .and_then(Value::as_array)
            .ok_or_else(|| IntentError::MalformedReply("missing data[]".into()))?;
        if data.len() != chunk.len() {
            return Err(IntentError::MalformedReply(format!("{} vectors for {} inputs", data.len(), chunk.len())));
        }
        // entries may carry an explicit index; fall back to position
        let mut slots: Vec<Option<Vec<f64>>> = vec![None; chunk.len()];
        for (pos, item) in data.iter().enumerate() {
            let idx = item.get("index").and_then(Value::as_u64).map_or(pos, |i| i as usize);
            let vec = item
                .get("embedding")
                .and_then(Value::as_array)
                .and_then(|a| a.iter().map(Value::as_f64).collect::<Option<Vec<f64>>>())
                .ok_or_else(|| IntentError::MalformedReply(format!("data[{pos}].embedding is not numeric")))?;
            *slots
                .get_mut(idx)
                .ok_or_else(|| IntentError::MalformedReply(format!("index {idx} out of range")))? = Some(vec);
        }
        chunk
            .iter()
            .zip(slots)
            .map(|(t, v)| {
                let v = v.ok_or_else(|| IntentError::MalformedReply(format!("no vector for intent {}", t.id)))?;
                IntentEmbedding::normalized(t.id, v)
            })
            .collect()
    }
}

impl Embedder for HttpEmbedder {
    fn id(&self) -> String {
        format!("http:{}", self.model)
    }

    fn embed_batch(&self, texts: &[IntentText]) -> Result<Vec<IntentEmbedding>> {
        let chunks: Vec<&[IntentText]> = texts.chunks(self.batch_size.max(1)).collect();
        let mut out = Vec::with_capacity(texts.len());
        for wave in chunks.chunks(self.max_in_flight.max(1)) {
            let results: Vec<Result<Vec<IntentEmbedding>>> = std::thread::scope(|s| {
                let handles: Vec<_> = wave.iter().map(|c| s.spawn(move || self.embed_chunk(c))).collect();
                handles.into_iter().map(|h| h.join().expect("embedding worker panicked")).collect()
            });
            for r in results {
                out.extend(r?);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn it(text: &str) -> IntentText {
        IntentText { id: 0, text: text.into() }
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x8594_4171_f739_67e8);
    }

    #[test]
    fn deterministic_and_unit_norm() {
        let e = HashedBagOfWords::default();
        let a = embed_intent(&it("maximize coverage"), &e).unwrap();
        let b = embed_intent(&it("maximize coverage"), &e).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dim, HASHED_DIM);
        let norm: f64 = a.vector.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-9);
    }

    #[test]
    fn case_and_punctuation_insensitive() {
        let e = HashedBagOfWords::default();
        let a = embed_intent(&it("Maximize, COVERAGE!"), &e).unwrap();
        let b = embed_intent(&it("maximize coverage"), &e).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn different_intents_are_not_parallel() {
        let e = HashedBagOfWords::default();
        let a = embed_intent(&it("maximize coverage"), &e).unwrap();
        let b = embed_intent(&it("minimize energy"), &e).unwrap();
        assert!(a.cosine(&b) < 1.0);
    }

    #[test]
    fn empty_token_stream_is_an_error() {
        let e = HashedBagOfWords::default();
        assert!(matches!(embed_intent(&it("?!  ..."), &e), Err(IntentError::Domain(_))));
    }

    proptest! {
        #[test]
        fn normalized_whenever_hash_vector_nonzero(words in proptest::collection::vec("[a-zA-Z0-9]{1,10}", 1..12)) {
            let text = words.join(" ");
            let e = HashedBagOfWords::default();
            let raw = e.raw_vector(&text).unwrap();
            match embed_intent(&it(&text), &e) {
                Ok(v) => {
                    let norm: f64 = v.vector.iter().map(|x| x * x).sum::<f64>().sqrt();
                    prop_assert!((norm - 1.0).abs() < 1e-9);
                }
                // only exact sign cancellation can produce a zero vector
                Err(_) => prop_assert!(raw.iter().all(|&x| x == 0.0)),
            }
        }
    }
}
