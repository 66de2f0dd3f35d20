use serde::{Deserialize, Serialize};

use super::embed::Embedder;
use super::store::VectorStore;
use super::DocsError;
use crate::nl::{ChatMessage, LlmClient, LlmRequest, ModelCall};

pub const DEFAULT_TOP_K: usize = 4;
pub const NO_DOCUMENTS: &str = "No documents are indexed, so there is nothing to search.";

pub const DOC_PROMPT_VERSION: &str = "doc-answer/1";
const DOC_SYSTEM_PROMPT: &str = "You answer questions about computer component compatibility \
using only the numbered passages supplied. Cite passages as [doc_id chars start-end]. \
If the passages do not contain the answer, say so.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Citation {
    pub doc_id: String,
    pub seq: u64,
    pub char_start: usize,
    pub char_end: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocAnswer {
    pub answer: String,
    pub citations: Vec<Citation>,
    pub notices: Vec<String>,
    pub model_calls: Vec<ModelCall>,
}

fn cite(c: &Citation) -> String {
    format!("[{} chars {}-{}]", c.doc_id, c.char_start, c.char_end)
}

/// Retrieves the `k` closest chunks and answers from them. Without a client
/// the answer lists the retrieved passages in rank order.
pub fn answer_from_docs(
    question: &str,
    store: &VectorStore,
    embedder: &dyn Embedder,
    llm: Option<&dyn LlmClient>,
    k: usize,
) -> Result<DocAnswer, DocsError> {
    if store.is_empty() {
        return Ok(DocAnswer {
            answer: NO_DOCUMENTS.to_string(),
            citations: Vec::new(),
            notices: vec!["no documents indexed".to_string()],
            model_calls: Vec::new(),
        });
    }
    let query = embedder.embed(question)?;
    let mut notices = Vec::new();
    if query.guard {
        notices.push("question has no searchable words; ranking is arbitrary".to_string());
    }
    let hits = store.search_topk(&query.values, k)?;
    let citations: Vec<Citation> = hits
        .iter()
        .map(|h| Citation {
            doc_id: h.chunk.doc_id.clone(),
            seq: h.chunk.seq,
            char_start: h.chunk.char_start,
            char_end: h.chunk.char_end,
            score: h.score,
        })
        .collect();
    let mut passages = String::new();
    for (i, (h, c)) in hits.iter().zip(&citations).enumerate() {
        passages.push_str(&format!("{}. {} {}\n", i + 1, cite(c), h.chunk.text.trim()));
    }
    let template = format!("Relevant passages for \"{}\":\n{passages}", question.trim());

    let mut model_calls = Vec::new();
    let answer = match llm {
        None => template,
        Some(client) => {
            let request = LlmRequest {
                model: client.model().to_string(),
                messages: vec![
                    ChatMessage::system(DOC_SYSTEM_PROMPT),
                    ChatMessage::user(format!("Passages:\n{passages}\nQuestion: {question}")),
                ],
                temperature: 0.0,
            };
            match client.complete(&request) {
                Ok(resp) => {
                    model_calls.push(ModelCall::ok("doc_answer", DOC_PROMPT_VERSION, 1, &resp.content));
                    resp.content
                }
                Err(e) => {
                    model_calls.push(ModelCall::failed("doc_answer", DOC_PROMPT_VERSION, 1, &e.to_string()));
                    notices.push(format!("model answer unavailable ({e}); showing passages"));
                    template
                }
            }
        }
    };
    Ok(DocAnswer { answer, citations, notices, model_calls })
}
