use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::keywords::{extract_keywords, Gazetteer, KeywordSet};
use super::llm::{ChatMessage, LlmClient, LlmRequest};
use super::prompts::*;
use crate::docs::{answer_from_docs, Citation, DocsError, Embedder, VectorStore, DEFAULT_TOP_K};
use crate::graph::Graph;
use crate::query::{execute_query, keyword_template_query, parse_readonly, QueryAst, QueryError, ResultTable};

pub const MAX_ATTEMPTS: u32 = 3;
pub const ANSWER_ROW_CAP: usize = 50;
pub const NO_MATCHING_RULES: &str = "There are no matching rules for this question.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AgentMode {
    GraphAgent,
    DocAgent,
}

impl AgentMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AgentMode::GraphAgent => "GraphAgent",
            AgentMode::DocAgent => "DocAgent",
        }
    }
}

impl FromStr for AgentMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "graphagent" | "graph" => Ok(AgentMode::GraphAgent),
            "docagent" | "doc" | "docs" => Ok(AgentMode::DocAgent),
            _ => Err(format!("unknown mode {s:?} (expected GraphAgent or DocAgent)")),
        }
    }
}

/// One request to the model as recorded in a trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelCall {
    pub purpose: String,
    pub prompt_version: String,
    pub attempt: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ModelCall {
    pub fn ok(purpose: &str, version: &str, attempt: u32, output: &str) -> Self {
        Self {
            purpose: purpose.into(),
            prompt_version: version.into(),
            attempt,
            output: Some(output.into()),
            error: None,
        }
    }

    pub fn failed(purpose: &str, version: &str, attempt: u32, error: &str) -> Self {
        Self {
            purpose: purpose.into(),
            prompt_version: version.into(),
            attempt,
            output: None,
            error: Some(error.into()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub keywords: KeywordSet,
    pub generated_query: Option<String>,
    pub attempts: u32,
    pub fallback_used: bool,
    pub degraded_to_docs: bool,
    pub row_count: Option<usize>,
    pub model_calls: Vec<ModelCall>,
    pub citations: Vec<Citation>,
    pub notices: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatTurn {
    pub question: String,
    /// The mode that produced the answer.
    pub mode: AgentMode,
    pub answer: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<ResultTable>,
    pub trace: Trace,
}

#[derive(Debug, Error)]
pub enum ChatError {
    #[error("no graph is loaded; ingest rules first")]
    NoGraph,
    #[error("{0}")]
    Upstream(String),
    #[error("{0}")]
    Internal(String),
}

impl From<DocsError> for ChatError {
    fn from(e: DocsError) -> Self {
        match e {
            DocsError::Upstream(m) => ChatError::Upstream(m),
            other => ChatError::Internal(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatConfig {
    pub max_attempts: u32,
    pub temperature: f64,
    /// Ask the model to word the answer instead of using the fixed summary.
    pub llm_answers: bool,
    pub doc_top_k: usize,
}

impl Default for ChatConfig {
    fn default() -> Self {
        Self {
            max_attempts: MAX_ATTEMPTS,
            temperature: 0.0,
            llm_answers: false,
            doc_top_k: DEFAULT_TOP_K,
        }
    }
}

/// A graph together with the lexicon and schema text derived from it.
#[derive(Debug, Clone)]
pub struct GraphContext {
    pub graph: Graph,
    pub gazetteer: Gazetteer,
    pub schema: String,
}

impl GraphContext {
    pub fn new(graph: Graph) -> Self {
        let gazetteer = Gazetteer::from_graph(&graph);
        let schema = schema_summary(&graph);
        Self { graph, gazetteer, schema }
    }
}

pub struct ChatContext<'a> {
    pub graph: Option<&'a GraphContext>,
    pub store: Option<&'a VectorStore>,
    pub embedder: &'a dyn Embedder,
    pub llm: &'a dyn LlmClient,
    pub config: &'a ChatConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedQuery {
    pub text: String,
    pub ast: QueryAst,
    pub attempts: u32,
    pub fallback_used: bool,
    pub model_calls: Vec<ModelCall>,
    pub notices: Vec<String>,
}

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error("the model produced no usable query and the question has no keywords")]
    NoKeywords { attempts: u32, model_calls: Vec<ModelCall>, notices: Vec<String> },
    #[error("keyword query failed validation: {0}")]
    Template(QueryError),
}

/// Removes a surrounding Markdown code fence, if any.
pub fn strip_code_fences(text: &str) -> &str {
    let t = text.trim();
    if let Some(start) = t.find("```") {
        let after = &t[start + 3..];
        let body = after.split_once('\n').map_or("", |(_, rest)| rest);
        let body = match after.split_once('\n') {
            Some((tag, _)) if tag.trim().contains(' ') => after,
            _ => body,
        };
        return body.split("```").next().unwrap_or("").trim();
    }
    t
}

fn template_for(keywords: &KeywordSet) -> Result<(String, QueryAst), QueryError> {
    let text = keyword_template_query(keywords)?;
    let ast = parse_readonly(&text)?;
    Ok((text, ast))
}

/// Asks the model for a query, re-prompting with the parser diagnostic on
/// rejection. A transport failure or exhausted attempts fall back to the
/// keyword template.
pub fn generate_structured_query(
    question: &str,
    schema: &str,
    keywords: &KeywordSet,
    llm: &dyn LlmClient,
    config: &ChatConfig,
) -> Result<GeneratedQuery, GenerationError> {
    let mut messages = vec![
        ChatMessage::system(QUERY_SYSTEM_PROMPT),
        ChatMessage::user(format!("Schema:\n{schema}\nQuestion: {question}")),
    ];
    let mut model_calls = Vec::new();
    let mut notices = Vec::new();
    let mut attempts = 0;
    while attempts < config.max_attempts {
        attempts += 1;
        let request = LlmRequest {
            model: llm.model().to_string(),
            messages: messages.clone(),
            temperature: config.temperature,
        };
        let reply = match llm.complete(&request) {
            Ok(r) => r.content,
            Err(e) => {
                model_calls.push(ModelCall::failed("query", QUERY_PROMPT_VERSION, attempts, &e.to_string()));
                notices.push(format!("model unavailable: {e}"));
                break;
            }
        };
        model_calls.push(ModelCall::ok("query", QUERY_PROMPT_VERSION, attempts, &reply));
        let candidate = strip_code_fences(&reply);
        match parse_readonly(candidate) {
            Ok(ast) => {
                return Ok(GeneratedQuery {
                    text: candidate.to_string(),
                    ast,
                    attempts,
                    fallback_used: false,
                    model_calls,
                    notices,
                })
            }
            Err(diag) => {
                notices.push(format!("attempt {attempts} rejected: {diag}"));
                messages.push(ChatMessage::assistant(reply));
                messages.push(ChatMessage::user(format!(
                    "Attempt {attempts} was rejected: {diag}. Reply with one corrected query only."
                )));
            }
        }
    }
    if keywords.is_empty() {
        return Err(GenerationError::NoKeywords { attempts, model_calls, notices });
    }
    let (text, ast) = template_for(keywords).map_err(GenerationError::Template)?;
    notices.push("using the keyword query".to_string());
    Ok(GeneratedQuery {
        text,
        ast,
        attempts,
        fallback_used: true,
        model_calls,
        notices,
    })
}

fn project_column(table: &ResultTable) -> Option<usize> {
    table
        .columns
        .iter()
        .position(|c| c == "project_name" || c.ends_with(".project_name"))
}

fn plural(n: usize, word: &str) -> String {
    if n == 1 {
        format!("{n} {word}")
    } else {
        format!("{n} {word}s")
    }
}

/// The fixed summary: row count and the distinct projects.
pub fn template_answer(table: &ResultTable) -> String {
    if table.rows.is_empty() {
        return NO_MATCHING_RULES.to_string();
    }
    let mut text = format!("Found {}", plural(table.rows.len(), "matching row"));
    if let Some(col) = project_column(table) {
        let mut projects: Vec<&str> = table.rows.iter().map(|r| r[col].as_str()).collect();
        projects.sort_unstable();
        projects.dedup();
        let label = if projects.len() == 1 { "project" } else { "projects" };
        text.push_str(&format!(" in {label} {}", projects.join(", ")));
    }
    text.push_str(". The rows are listed in the attached table.");
    text
}

fn table_as_text(table: &ResultTable, cap: usize) -> String {
    let mut out = table.columns.join("\t");
    out.push('\n');
    for row in table.rows.iter().take(cap) {
        out.push_str(&row.iter().map(|c| c.replace(['\t', '\n'], " ")).collect::<Vec<_>>().join("\t"));
        out.push('\n');
    }
    if table.rows.len() > cap {
        out.push_str(&format!("({} further rows omitted)\n", table.rows.len() - cap));
    }
    out
}

/// Prose for a result table. With `llm` set the model words it from at most
/// fifty rows; any failure falls back to the fixed summary.
pub fn compose_answer(
    question: &str,
    table: &ResultTable,
    llm: Option<&dyn LlmClient>,
    model_calls: &mut Vec<ModelCall>,
    notices: &mut Vec<String>,
) -> String {
    let Some(client) = llm else {
        return template_answer(table);
    };
    if table.rows.is_empty() {
        return template_answer(table);
    }
    let request = LlmRequest {
        model: client.model().to_string(),
        messages: vec![
            ChatMessage::system(ANSWER_SYSTEM_PROMPT),
            ChatMessage::user(format!(
                "Rows ({} total):\n{}\nAnswer the question: {question}",
                table.rows.len(),
                table_as_text(table, ANSWER_ROW_CAP)
            )),
        ],
        temperature: 0.0,
    };
    match client.complete(&request) {
        Ok(r) if !r.content.trim().is_empty() => {
            model_calls.push(ModelCall::ok("answer", ANSWER_PROMPT_VERSION, 1, &r.content));
            r.content.trim().to_string()
        }
        Ok(_) => {
            model_calls.push(ModelCall::failed("answer", ANSWER_PROMPT_VERSION, 1, "empty reply"));
            notices.push("model answer was empty; using the summary".into());
            template_answer(table)
        }
        Err(e) => {
            model_calls.push(ModelCall::failed("answer", ANSWER_PROMPT_VERSION, 1, &e.to_string()));
            notices.push(format!("model answer unavailable ({e}); using the summary"));
            template_answer(table)
        }
    }
}

fn doc_turn(question: &str, ctx: &ChatContext<'_>, mut trace: Trace) -> Result<ChatTurn, ChatError> {
    let llm = ctx.config.llm_answers.then_some(ctx.llm);
    let store = ctx.store.cloned().unwrap_or_else(|| VectorStore::new(ctx.embedder.dimension()));
    let docs = answer_from_docs(question, &store, ctx.embedder, llm, ctx.config.doc_top_k)?;
    trace.citations = docs.citations;
    trace.model_calls.extend(docs.model_calls);
    trace.notices.extend(docs.notices);
    Ok(ChatTurn {
        question: question.to_string(),
        mode: AgentMode::DocAgent,
        answer: docs.answer,
        table: None,
        trace,
    })
}

/// One question and answer: keywords, query generation and validation,
/// execution and the answer, or retrieval over documents.
pub fn chat_turn(question: &str, mode: AgentMode, ctx: &ChatContext<'_>) -> Result<ChatTurn, ChatError> {
    if mode == AgentMode::DocAgent {
        return doc_turn(question, ctx, Trace::default());
    }
    let graph = ctx.graph.ok_or(ChatError::NoGraph)?;
    let mut trace = Trace {
        keywords: extract_keywords(question, &graph.gazetteer),
        ..Trace::default()
    };
    if trace.keywords.is_empty() {
        trace.degraded_to_docs = true;
        trace.notices.push("no catalogue terms found in the question; searching documents instead".into());
        return doc_turn(question, ctx, trace);
    }
    let generated = match generate_structured_query(question, &graph.schema, &trace.keywords, ctx.llm, ctx.config) {
        Ok(g) => g,
        Err(GenerationError::NoKeywords { .. }) => unreachable!("keywords checked above"),
        Err(GenerationError::Template(e)) => return Err(ChatError::Internal(e.to_string())),
    };
    trace.attempts = generated.attempts;
    trace.fallback_used = generated.fallback_used;
    trace.generated_query = Some(generated.text.clone());
    trace.model_calls = generated.model_calls;
    trace.notices.extend(generated.notices);

    let table = execute_query(&generated.ast, &graph.graph);
    trace.row_count = Some(table.rows.len());
    if table.rows.is_empty() {
        trace.notices.push("query returned no rows".into());
    }
    let llm = ctx.config.llm_answers.then_some(ctx.llm);
    let answer = compose_answer(question, &table, llm, &mut trace.model_calls, &mut trace.notices);
    Ok(ChatTurn {
        question: question.to_string(),
        mode: AgentMode::GraphAgent,
        answer,
        table: Some(table),
        trace,
    })
}
