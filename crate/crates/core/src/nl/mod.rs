//! Natural-language questions: keyword extraction, model-backed query
//! generation with validation, answer composition and the chat turn.

mod gateway;
mod keywords;
mod llm;
mod prompts;

pub use gateway::*;
pub use keywords::{extract_keywords, tokenize_question, Gazetteer, KeywordSet, STOPLIST};
pub use llm::*;
pub use prompts::{schema_summary, ANSWER_PROMPT_VERSION, ANSWER_SYSTEM_PROMPT, QUERY_PROMPT_VERSION, QUERY_SYSTEM_PROMPT};
