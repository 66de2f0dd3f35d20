//! Document retrieval: chunking, embedding, an exact cosine store and
//! passage-based answers.

mod answer;
mod chunk;
mod embed;
mod store;

use thiserror::Error;

pub use answer::{answer_from_docs, Citation, DocAnswer, DEFAULT_TOP_K, DOC_PROMPT_VERSION, NO_DOCUMENTS};
pub use chunk::{chunk_text, reassemble, Chunk, BREAK_LOOKBACK, DEFAULT_CHUNK_OVERLAP, DEFAULT_CHUNK_SIZE};
pub use embed::{word_tokens, Embedder, EmbeddingVector, HttpEmbedder, LocalEmbedder, DEFAULT_DIMENSION};
pub use store::{cosine, load_documents, Hit, StoreEntry, VectorStore};

#[derive(Debug, Error)]
pub enum DocsError {
    #[error("{0}")]
    Usage(String),
    #[error("embedding service failed: {0}")]
    Upstream(String),
    #[error("malformed vector store: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
