use std::path::Path;

use serde::{Deserialize, Serialize};

use super::chunk::{chunk_text, Chunk};
use super::embed::{EmbeddingVector, Embedder};
use super::DocsError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreEntry {
    #[serde(flatten)]
    pub chunk: Chunk,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorStore {
    pub dimension: usize,
    pub entries: Vec<StoreEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub chunk: Chunk,
    pub score: f64,
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

impl VectorStore {
    pub fn new(dimension: usize) -> Self {
        Self { dimension, entries: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Adds a chunk; the vector is stored at unit length.
    pub fn insert(&mut self, chunk: Chunk, vector: Vec<f64>) -> Result<(), DocsError> {
        if vector.len() != self.dimension {
            return Err(DocsError::Usage(format!(
                "vector has dimension {}, store expects {}",
                vector.len(),
                self.dimension
            )));
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(DocsError::Usage("vector has non-finite entries".into()));
        }
        let vector = EmbeddingVector::normalized(vector).values;
        self.entries.push(StoreEntry { chunk, vector });
        Ok(())
    }

    /// Chunks and embeds every `(doc_id, text)` pair in order.
    pub fn build(
        documents: &[(String, String)],
        embedder: &dyn Embedder,
        size: usize,
        overlap: usize,
    ) -> Result<Self, DocsError> {
        let mut store = Self::new(embedder.dimension());
        for (doc_id, text) in documents {
            for chunk in chunk_text(doc_id, text, size, overlap)? {
                let v = embedder.embed(&chunk.text)?;
                store.insert(chunk, v.values)?;
            }
        }
        Ok(store)
    }

    /// Exact top-k by cosine similarity. Equal scores order by `(doc_id, seq)`.
    pub fn search_topk(&self, query: &[f64], k: usize) -> Result<Vec<Hit>, DocsError> {
        if k == 0 {
            return Err(DocsError::Usage("k must be at least 1".into()));
        }
        if query.len() != self.dimension {
            return Err(DocsError::Usage(format!(
                "query has dimension {}, store has {}",
                query.len(),
                self.dimension
            )));
        }
        let mut scored: Vec<(f64, &StoreEntry)> = self.entries.iter().map(|e| (cosine(query, &e.vector), e)).collect();
        scored.sort_by(|(sa, a), (sb, b)| {
            sb.total_cmp(sa)
                .then_with(|| a.chunk.doc_id.cmp(&b.chunk.doc_id))
                .then_with(|| a.chunk.seq.cmp(&b.chunk.seq))
        });
        Ok(scored
            .into_iter()
            .take(k)
            .map(|(score, e)| Hit { chunk: e.chunk.clone(), score })
            .collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("store serialises")
    }

    pub fn from_json(text: &str) -> Result<Self, DocsError> {
        let store: Self = serde_json::from_str(text).map_err(|e| DocsError::Format(e.to_string()))?;
        if let Some(bad) = store.entries.iter().find(|e| e.vector.len() != store.dimension) {
            return Err(DocsError::Format(format!(
                "entry {} #{} has dimension {}, store declares {}",
                bad.chunk.doc_id,
                bad.chunk.seq,
                bad.vector.len(),
                store.dimension
            )));
        }
        Ok(store)
    }
}

/// `.txt` and `.md` files directly inside `dir`, sorted by file name; the
/// file name is the document id.
pub fn load_documents(dir: &Path) -> Result<Vec<(String, String)>, DocsError> {
    let mut docs = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        let is_text = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| matches!(e, "txt" | "md"));
        if path.is_file() && is_text {
            let id = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
            docs.push((id, std::fs::read_to_string(&path)?));
        }
    }
    docs.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(docs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::docs::LocalEmbedder;

    fn chunk(doc: &str, seq: u64) -> Chunk {
        Chunk { doc_id: doc.into(), seq, char_start: 0, char_end: 1, text: "x".into() }
    }

    #[test]
    fn single_entry_and_exact_match() {
        let mut s = VectorStore::new(3);
        s.insert(chunk("a", 0), vec![3.0, 4.0, 0.0]).unwrap();
        let hits = s.search_topk(&[0.6, 0.8, 0.0], 5).unwrap();
        assert_eq!(hits.len(), 1);
        assert!((hits[0].score - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ties_and_errors() {
        let mut s = VectorStore::new(2);
        s.insert(chunk("b", 0), vec![1.0, 0.0]).unwrap();
        s.insert(chunk("a", 1), vec![1.0, 0.0]).unwrap();
        s.insert(chunk("a", 0), vec![1.0, 0.0]).unwrap();
        let order: Vec<(String, u64)> = s
            .search_topk(&[1.0, 0.0], 3)
            .unwrap()
            .into_iter()
            .map(|h| (h.chunk.doc_id, h.chunk.seq))
            .collect();
        assert_eq!(order, [("a".to_string(), 0), ("a".to_string(), 1), ("b".to_string(), 0)]);
        assert!(s.search_topk(&[1.0], 1).is_err());
        assert!(s.search_topk(&[1.0, 0.0], 0).is_err());
        assert!(s.insert(chunk("c", 0), vec![1.0]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let docs = vec![("a.txt".to_string(), "PSU rules for the GPU. ".repeat(40))];
        let s = VectorStore::build(&docs, &LocalEmbedder::new(16).unwrap(), 128, 16).unwrap();
        let text = s.to_json();
        assert!(text.contains("\"char_start\""));
        assert_eq!(VectorStore::from_json(&text).unwrap(), s);
        assert!(VectorStore::from_json("{\"dimension\":2,\"entries\":[{\"doc_id\":\"a\",\"seq\":0,\"char_start\":0,\"char_end\":1,\"text\":\"x\",\"vector\":[1.0]}]}").is_err());
    }
}
