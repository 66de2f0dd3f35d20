use serde::{Deserialize, Serialize};

use super::DocsError;
use crate::nl::HttpLlmClient;

pub const DEFAULT_DIMENSION: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
    /// Set when the input had no usable signal and the first basis vector
    /// was substituted.
    #[serde(default)]
    pub guard: bool,
}

impl EmbeddingVector {
    /// Scales to unit length; an all-zero or non-finite input becomes the
    /// flagged guard vector.
    pub fn normalized(mut values: Vec<f64>) -> Self {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() || values.is_empty() {
            let d = values.len().max(1);
            let mut guard = vec![0.0; d];
            guard[0] = 1.0;
            return Self { values: guard, guard: true };
        }
        for v in &mut values {
            *v /= norm;
        }
        Self { values, guard: false }
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

pub trait Embedder: Send + Sync {
    fn dimension(&self) -> usize;
    fn embed(&self, text: &str) -> Result<EmbeddingVector, DocsError>;
}

/// Hashed bag of words with signed buckets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalEmbedder {
    dimension: usize,
}

impl Default for LocalEmbedder {
    fn default() -> Self {
        Self { dimension: DEFAULT_DIMENSION }
    }
}

impl LocalEmbedder {
    pub fn new(dimension: usize) -> Result<Self, DocsError> {
        if dimension == 0 {
            return Err(DocsError::Usage("embedding dimension must be positive".into()));
        }
        Ok(Self { dimension })
    }
}

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Lower-cased alphanumeric runs.
pub fn word_tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.chars().flat_map(char::to_lowercase).collect())
}

impl Embedder for LocalEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, DocsError> {
        let mut values = vec![0.0; self.dimension];
        for token in word_tokens(text) {
            let h = fnv1a(token.as_bytes());
            let bucket = (h % self.dimension as u64) as usize;
            let sign = if (h >> 63) & 1 == 1 { -1.0 } else { 1.0 };
            values[bucket] += sign;
        }
        Ok(EmbeddingVector::normalized(values))
    }
}

/// Embeddings from `POST {endpoint}/embeddings`.
pub struct HttpEmbedder {
    client: HttpLlmClient,
    model: String,
    dimension: usize,
}

impl HttpEmbedder {
    pub fn new(client: HttpLlmClient, model: impl Into<String>, dimension: usize) -> Self {
        Self { client, model: model.into(), dimension }
    }
}

impl Embedder for HttpEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, DocsError> {
        let body = serde_json::json!({ "model": self.model, "input": text });
        let value = self
            .client
            .post_json("embeddings", &body)
            .map_err(|e| DocsError::Upstream(e.to_string()))?;
        let raw = value
            .pointer("/data/0/embedding")
            .and_then(|v| v.as_array())
            .ok_or_else(|| DocsError::Upstream("response has no data[0].embedding".into()))?;
        let values = raw
            .iter()
            .map(|v| v.as_f64().ok_or_else(|| DocsError::Upstream("non-numeric embedding value".into())))
            .collect::<Result<Vec<f64>, _>>()?;
        if values.len() != self.dimension {
            return Err(DocsError::Upstream(format!(
                "embedding has dimension {}, expected {}",
                values.len(),
                self.dimension
            )));
        }
        Ok(EmbeddingVector::normalized(values))
    }
}
