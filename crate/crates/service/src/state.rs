use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use serde::Serialize;

use kgrec_core::docs::{Embedder, VectorStore};
use kgrec_core::graph::{Graph, GraphStats};
use kgrec_core::nl::{chat_turn, AgentMode, ChatConfig, ChatContext, ChatTurn, GraphContext, LlmClient, LlmError, LlmRequest, LlmResponse};
use kgrec_core::rules::{ingest, InputFormat, QuarantinedRule};

use crate::error::{ApiError, ErrorCode};

/// What one request sees. Never mutated once published.
#[derive(Debug, Default)]
pub struct Snapshot {
    pub generation: u64,
    pub graph: Option<GraphContext>,
    pub store: Option<VectorStore>,
}

impl Snapshot {
    pub fn graph(&self) -> Result<&Graph, ApiError> {
        self.graph.as_ref().map(|g| &g.graph).ok_or_else(ApiError::no_graph)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IngestSummary {
    pub generation: u64,
    pub rules: usize,
    pub quarantined: Vec<QuarantinedRule>,
    pub stats: GraphStats,
}

pub struct AppState {
    snapshot: RwLock<Arc<Snapshot>>,
    ingest_lock: Mutex<()>,
    llm: Arc<dyn LlmClient>,
    embedder: Arc<dyn Embedder>,
    chat: ChatConfig,
    /// Report a model outage as Upstream instead of answering from the keyword query.
    strict_upstream: bool,
}

impl AppState {
    pub fn new(llm: Arc<dyn LlmClient>, embedder: Arc<dyn Embedder>) -> Self {
        Self {
            snapshot: RwLock::new(Arc::new(Snapshot::default())),
            ingest_lock: Mutex::new(()),
            llm,
            embedder,
            chat: ChatConfig::default(),
            strict_upstream: false,
        }
    }

    pub fn with_chat_config(mut self, chat: ChatConfig) -> Self {
        self.chat = chat;
        self
    }

    pub fn with_strict_upstream(mut self, strict: bool) -> Self {
        self.strict_upstream = strict;
        self
    }

    pub fn with_graph(self, graph: Graph) -> Self {
        self.publish(|old| Snapshot {
            generation: old.generation + 1,
            graph: Some(GraphContext::new(graph)),
            store: old.store.clone(),
        });
        self
    }

    pub fn with_store(self, store: VectorStore) -> Self {
        self.publish(|old| Snapshot {
            generation: old.generation + 1,
            graph: old.graph.clone(),
            store: Some(store),
        });
        self
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.snapshot.read().unwrap_or_else(|p| p.into_inner()).clone()
    }

    fn publish(&self, next: impl FnOnce(&Snapshot) -> Snapshot) -> u64 {
        let mut slot = self.snapshot.write().unwrap_or_else(|p| p.into_inner());
        let snap = next(&slot);
        let generation = snap.generation;
        *slot = Arc::new(snap);
        generation
    }

    /// Parses and compiles `content`, then swaps the graph in. Runs of this
    /// are serialised; readers keep whichever snapshot they already hold.
    pub fn ingest(&self, content: &str, format: InputFormat) -> Result<IngestSummary, ApiError> {
        let _guard = self.ingest_lock.lock().unwrap_or_else(|p| p.into_inner());
        let ingested = ingest(content.as_bytes(), format).map_err(|e| ApiError::bad_request(e.to_string()))?;
        let graph = Graph::build(ingested.batch).map_err(|e| ApiError::internal(e.to_string()))?;
        let stats = graph.stats();
        let ctx = GraphContext::new(graph);
        let generation = self.publish(|old| Snapshot {
            generation: old.generation + 1,
            graph: Some(ctx),
            store: old.store.clone(),
        });
        tracing::info!(generation, nodes = stats.node_count, edges = stats.edge_count, "graph replaced");
        Ok(IngestSummary {
            generation,
            rules: ingested.asts.len(),
            quarantined: ingested.quarantined,
            stats,
        })
    }

    /// One chat turn against the current snapshot. Blocks on model calls.
    pub fn chat(&self, question: &str, mode: AgentMode) -> Result<ChatTurn, ApiError> {
        let snap = self.snapshot();
        let watch = TransportWatch {
            inner: self.llm.as_ref(),
            failed: AtomicBool::new(false),
        };
        let ctx = ChatContext {
            graph: snap.graph.as_ref(),
            store: snap.store.as_ref(),
            embedder: self.embedder.as_ref(),
            llm: &watch,
            config: &self.chat,
        };
        let turn = chat_turn(question, mode, &ctx)?;
        if self.strict_upstream && turn.trace.fallback_used && watch.failed.load(Ordering::Relaxed) {
            let detail = turn
                .trace
                .model_calls
                .iter()
                .rev()
                .find_map(|c| c.error.clone())
                .unwrap_or_else(|| "model unavailable".into());
            return Err(ApiError::new(ErrorCode::Upstream, detail));
        }
        Ok(turn)
    }
}

/// Remembers whether any call failed in transport.
struct TransportWatch<'a> {
    inner: &'a dyn LlmClient,
    failed: AtomicBool,
}

impl LlmClient for TransportWatch<'_> {
    fn complete(&self, request: &LlmRequest) -> Result<LlmResponse, LlmError> {
        let out = self.inner.complete(request);
        if matches!(out, Err(LlmError::Transport(_))) {
            self.failed.store(true, Ordering::Relaxed);
        }
        out
    }

    fn model(&self) -> &str {
        self.inner.model()
    }
}
