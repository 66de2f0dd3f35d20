//! Chat-completion clients: an OpenAI-compatible HTTP client and a scripted
//! mock for offline runs.

use std::io::BufRead;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self { role: Role::Assistant, content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
}

impl LlmRequest {
    pub fn last_user_message(&self) -> Option<&str> {
        self.messages
            .iter()
            .rev()
            .find(|m| m.role == Role::User)
            .map(|m| m.content.as_str())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    #[serde(default)]
    pub prompt_tokens: u64,
    #[serde(default)]
    pub completion_tokens: u64,
    #[serde(default)]
    pub total_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlmResponse {
    pub content: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usage: Option<Usage>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlmError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("model transport failed: {0}")]
    Transport(String),
    #[error("unexpected model response: {0}")]
    Protocol(String),
    #[error("mock script has no rule matching {0:?}")]
    NoScriptMatch(String),
    #[error("model client configuration: {0}")]
    Config(String),
}

pub trait LlmClient: Send + Sync {
    fn complete(&self, request: &LlmRequest) -> Result<LlmResponse, LlmError>;

    /// Model name to put in requests.
    fn model(&self) -> &str;
}

fn check_request(request: &LlmRequest) -> Result<(), LlmError> {
    if request.messages.is_empty() {
        return Err(LlmError::InvalidRequest("no messages".into()));
    }
    if !(0.0..=2.0).contains(&request.temperature) {
        return Err(LlmError::InvalidRequest(format!("temperature {} outside [0, 2]", request.temperature)));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockRule {
    #[serde(rename = "match")]
    pub pattern: String,
    pub response: String,
}

/// Answers with the first rule whose `match` is a substring of the last
/// user message.
#[derive(Debug, Clone, Default)]
pub struct MockLlm {
    rules: Vec<MockRule>,
}

impl MockLlm {
    pub fn new(rules: Vec<MockRule>) -> Self {
        Self { rules }
    }

    /// Reads a JSON-lines script. Blank lines and lines starting with `#` are skipped.
    pub fn from_jsonl<R: BufRead>(reader: R) -> Result<Self, LlmError> {
        let mut rules = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| LlmError::Config(format!("mock script: {e}")))?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let rule: MockRule = serde_json::from_str(trimmed)
                .map_err(|e| LlmError::Config(format!("mock script line {}: {e}", i + 1)))?;
            rules.push(rule);
        }
        Ok(Self { rules })
    }

    pub fn rules(&self) -> &[MockRule] {
        &self.rules
    }
}

impl LlmClient for MockLlm {
    fn complete(&self, request: &LlmRequest) -> Result<LlmResponse, LlmError> {
        check_request(request)?;
        let prompt = request.last_user_message().unwrap_or("");
        self.rules
            .iter()
            .find(|r| prompt.contains(&r.pattern))
            .map(|r| LlmResponse { content: r.response.clone(), usage: None })
            .ok_or_else(|| {
                let head: String = prompt.chars().take(80).collect();
                LlmError::NoScriptMatch(head)
            })
    }

    fn model(&self) -> &str {
        "mock"
    }
}

/// Counting semaphore bounding concurrent requests.
#[derive(Debug)]
pub struct InFlightLimit {
    available: Mutex<usize>,
    freed: Condvar,
}

pub struct Permit<'a>(&'a InFlightLimit);

impl InFlightLimit {
    pub fn new(max: usize) -> Self {
        Self { available: Mutex::new(max.max(1)), freed: Condvar::new() }
    }

    pub fn acquire(&self) -> Permit<'_> {
        let mut n = self.available.lock().unwrap_or_else(|p| p.into_inner());
        while *n == 0 {
            n = self.freed.wait(n).unwrap_or_else(|p| p.into_inner());
        }
        *n -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut n = self.0.available.lock().unwrap_or_else(|p| p.into_inner());
        *n += 1;
        self.0.freed.notify_one();
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HttpConfig {
    pub endpoint: String,
    pub api_key: Option<String>,
    pub model: String,
    pub timeout: Duration,
    pub max_in_flight: usize,
}

pub const DEFAULT_MODEL: &str = "gpt-4o-mini";
pub const DEFAULT_TIMEOUT_SECS: u64 = 30;
pub const DEFAULT_MAX_IN_FLIGHT: usize = 4;

impl HttpConfig {
    /// Reads `LLM_ENDPOINT`, `LLM_API_KEY`, `LLM_MODEL`, `LLM_TIMEOUT_SECS`
    /// and `LLM_MAX_IN_FLIGHT`.
    pub fn from_env() -> Result<Self, LlmError> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self, LlmError> {
        let endpoint = get("LLM_ENDPOINT")
            .filter(|s| !s.trim().is_empty())
            .ok_or_else(|| LlmError::Config("LLM_ENDPOINT is not set".into()))?;
        let number = |key: &str, default: u64| -> Result<u64, LlmError> {
            match get(key) {
                None => Ok(default),
                Some(v) => v.trim().parse().map_err(|_| LlmError::Config(format!("{key}={v:?} is not a number"))),
            }
        };
        Ok(Self {
            endpoint: endpoint.trim_end_matches('/').to_string(),
            api_key: get("LLM_API_KEY").filter(|s| !s.is_empty()),
            model: get("LLM_MODEL").filter(|s| !s.is_empty()).unwrap_or_else(|| DEFAULT_MODEL.into()),
            timeout: Duration::from_secs(number("LLM_TIMEOUT_SECS", DEFAULT_TIMEOUT_SECS)?),
            max_in_flight: number("LLM_MAX_IN_FLIGHT", DEFAULT_MAX_IN_FLIGHT as u64)? as usize,
        })
    }
}

#[derive(Deserialize)]
struct CompletionBody {
    choices: Vec<CompletionChoice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct CompletionChoice {
    message: CompletionMessage,
}

#[derive(Deserialize)]
struct CompletionMessage {
    #[serde(default)]
    content: Option<String>,
}

/// Blocking client for `POST {endpoint}/chat/completions`.
pub struct HttpLlmClient {
    config: HttpConfig,
    http: reqwest::blocking::Client,
    limit: InFlightLimit,
}

impl HttpLlmClient {
    pub fn new(config: HttpConfig) -> Result<Self, LlmError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| LlmError::Config(e.to_string()))?;
        let limit = InFlightLimit::new(config.max_in_flight);
        Ok(Self { config, http, limit })
    }

    pub fn config(&self) -> &HttpConfig {
        &self.config
    }

    pub(crate) fn post_json(&self, path: &str, body: &serde_json::Value) -> Result<serde_json::Value, LlmError> {
        let _permit = self.limit.acquire();
        let mut req = self.http.post(format!("{}/{path}", self.config.endpoint)).json(body);
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| LlmError::Transport(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| LlmError::Transport(e.to_string()))?;
        if !status.is_success() {
            let head: String = text.chars().take(200).collect();
            return Err(LlmError::Transport(format!("HTTP {status}: {head}")));
        }
        serde_json::from_str(&text).map_err(|e| LlmError::Protocol(e.to_string()))
    }
}

impl LlmClient for HttpLlmClient {
    fn complete(&self, request: &LlmRequest) -> Result<LlmResponse, LlmError> {
        check_request(request)?;
        let body = serde_json::to_value(request).expect("request serialises");
        let value = self.post_json("chat/completions", &body)?;
        let parsed: CompletionBody = serde_json::from_value(value).map_err(|e| LlmError::Protocol(e.to_string()))?;
        let content = parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| LlmError::Protocol("no choices[0].message.content".into()))?;
        Ok(LlmResponse { content, usage: parsed.usage })
    }

    fn model(&self) -> &str {
        &self.config.model
    }
}
