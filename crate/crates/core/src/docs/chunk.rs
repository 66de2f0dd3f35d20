use serde::{Deserialize, Serialize};

use super::DocsError;

pub const DEFAULT_CHUNK_SIZE: usize = 512;
pub const DEFAULT_CHUNK_OVERLAP: usize = 64;
/// How far back from the window end to look for a whitespace break.
pub const BREAK_LOOKBACK: usize = 16;

/// A window of a source document. Offsets count characters, not bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub doc_id: String,
    pub seq: u64,
    pub char_start: usize,
    pub char_end: usize,
    pub text: String,
}

/// Sliding windows of at most `size` characters. Each chunk after the first
/// starts `overlap` characters before the previous one ended. A window ends
/// just after whitespace when one occurs in its last few characters.
pub fn chunk_text(doc_id: &str, text: &str, size: usize, overlap: usize) -> Result<Vec<Chunk>, DocsError> {
    if size == 0 || overlap >= size {
        return Err(DocsError::Usage(format!(
            "chunk overlap ({overlap}) must be smaller than chunk size ({size})"
        )));
    }
    let chars: Vec<char> = text.chars().collect();
    let n = chars.len();
    let mut chunks = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = (start + size).min(n);
        if end < n {
            let floor = (end - BREAK_LOOKBACK.min(end)).max(start + overlap + 1);
            if let Some(cut) = (floor..=end).rev().find(|&e| chars[e - 1].is_whitespace()) {
                end = cut;
            }
        }
        chunks.push(Chunk {
            doc_id: doc_id.to_string(),
            seq: chunks.len() as u64,
            char_start: start,
            char_end: end,
            text: chars[start..end].iter().collect(),
        });
        if end == n {
            break;
        }
        start = end - overlap;
    }
    Ok(chunks)
}

/// Reassembles a source from its chunks using offsets alone.
pub fn reassemble(chunks: &[Chunk]) -> String {
    let mut out = String::new();
    let mut covered = 0usize;
    for c in chunks {
        let skip = covered.saturating_sub(c.char_start);
        out.extend(c.text.chars().skip(skip));
        covered = covered.max(c.char_end);
    }
    out
}
