//! The `kgrec` command line. Exit status 0 on success, 1 for usage errors,
//! 2 when the input data cannot be used.

use std::ffi::OsString;
use std::io::{BufRead, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use kgrec_core::docs::{
    load_documents, Embedder, HttpEmbedder, LocalEmbedder, VectorStore, DEFAULT_CHUNK_OVERLAP, DEFAULT_CHUNK_SIZE,
    DEFAULT_DIMENSION,
};
use kgrec_core::graph::{export_graph, import_graph, ExportFormat, ExportedGraph, Graph, NodeId};
use kgrec_core::nl::{chat_turn, AgentMode, ChatConfig, ChatContext, GraphContext, HttpConfig, HttpLlmClient, LlmClient, MockLlm};
use kgrec_core::query::{execute_query, parse_readonly};
use kgrec_core::recommend::{explain_recommendation, explain_violations, recommend_for, validate_config, Configuration};
use kgrec_core::rules::{ingest, quarantine_report, InputFormat};

use crate::{api, AppState};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;

pub const DEFAULT_EMBEDDING_MODEL: &str = "text-embedding-3-small";

#[derive(Debug, Parser)]
#[command(name = "kgrec", version, about = "Component-compatibility knowledge graph tools", arg_required_else_help = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleFormat {
    Tsv,
    Csv,
    Jsonl,
}

impl From<RuleFormat> for InputFormat {
    fn from(f: RuleFormat) -> Self {
        match f {
            RuleFormat::Tsv => InputFormat::Tsv,
            RuleFormat::Csv => InputFormat::Csv,
            RuleFormat::Jsonl => InputFormat::Jsonl,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GraphFormat {
    Json,
    Graphml,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LlmKind {
    Mock,
    Http,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EmbedderKind {
    Local,
    Http,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Graph,
    Doc,
}

impl From<ModeArg> for AgentMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Graph => AgentMode::GraphAgent,
            ModeArg::Doc => AgentMode::DocAgent,
        }
    }
}

#[derive(Debug, clap::Args)]
pub struct ModelArgs {
    /// Model backend. `http` reads LLM_ENDPOINT, LLM_API_KEY, LLM_MODEL, LLM_TIMEOUT_SECS.
    #[arg(long, value_enum, default_value = "mock")]
    pub llm: LlmKind,
    /// Mock reply script (JSONL of {"match", "response"}); required with `--llm mock`.
    #[arg(long)]
    pub script: Option<PathBuf>,
    /// Vector store built by `index-docs`.
    #[arg(long)]
    pub docs: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "local")]
    pub embedder: EmbedderKind,
    /// Let the model word graph answers instead of the fixed summary.
    #[arg(long)]
    pub llm_answers: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a rule table and write the compiled graph.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        /// Defaults to the input file's extension.
        #[arg(long, value_enum)]
        format: Option<RuleFormat>,
        #[arg(long)]
        out: PathBuf,
        /// Where to write rejected rows as JSONL.
        #[arg(long)]
        quarantine: Option<PathBuf>,
    },
    /// Run a read-only graph query.
    Query {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        json: bool,
        query: String,
    },
    /// Recommend components for a selection.
    Recommend {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        select: Vec<u64>,
        #[arg(long)]
        category: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Check a selection against every rule of its project.
    Validate {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_delimiter = ',')]
        select: Vec<u64>,
        /// Project to check when nothing is selected.
        #[arg(long)]
        project: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Question-and-answer loop over stdin. `:mode graph|doc` switches agent, `:quit` exits.
    Chat {
        #[arg(long)]
        graph: Option<PathBuf>,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value = "graph")]
        mode: ModeArg,
        /// Print each turn as one JSON line.
        #[arg(long)]
        json: bool,
    },
    /// Serve the REST API.
    Serve {
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long, env = "PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Allowed browser origin; any origin when unset.
        #[arg(long, env = "UI_ORIGIN")]
        ui_origin: Option<String>,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Write a graph as GraphML, CSV or JSON.
    Export {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_enum)]
        format: GraphFormat,
        /// File for json/graphml, directory for csv (nodes.csv and edges.csv). Stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Chunk and embed a directory of .txt/.md files into a vector store.
    IndexDocs {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_CHUNK_SIZE)]
        chunk_size: usize,
        #[arg(long, default_value_t = DEFAULT_CHUNK_OVERLAP)]
        overlap: usize,
        #[arg(long, default_value_t = DEFAULT_DIMENSION)]
        dimension: usize,
        #[arg(long, value_enum, default_value = "local")]
        embedder: EmbedderKind,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Data(e)
    }
}

type CliResult = Result<(), CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, stdin: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let text = e.render().to_string();
                    let _ = write!(err, "{text}");
                    if !text.contains("Usage:") {
                        let _ = writeln!(err, "\n{}", <Cli as clap::CommandFactory>::command().render_usage());
                    }
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(cli.command, stdin, out, err) {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}\n\nRun `kgrec --help` for usage.");
            EXIT_USAGE
        }
        Err(CliError::Data(e)) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_DATA
        }
    }
}

fn execute(command: Command, stdin: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    match command {
        Command::Ingest { input, format, out: graph_path, quarantine } => {
            cmd_ingest(&input, format, &graph_path, quarantine.as_deref(), out, err)
        }
        Command::Query { graph, json, query } => cmd_query(&graph, &query, json, out),
        Command::Recommend { graph, select, category, json } => cmd_recommend(&graph, &select, category.as_deref(), json, out),
        Command::Validate { graph, select, project, json } => cmd_validate(&graph, &select, project, json, out),
        Command::Chat { graph, model, mode, json } => cmd_chat(graph.as_deref(), &model, mode.into(), json, stdin, out, err),
        Command::Serve { graph, port, host, ui_origin, model } => cmd_serve(graph.as_deref(), &host, port, ui_origin.as_deref(), &model, err),
        Command::Export { graph, format, out: target } => cmd_export(&graph, format, target.as_deref(), out),
        Command::IndexDocs { input, out: store_path, chunk_size, overlap, dimension, embedder } => {
            cmd_index_docs(&input, &store_path, chunk_size, overlap, dimension, embedder, out)
        }
    }
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Data(e.into())
}

fn infer_format(path: &Path) -> Result<InputFormat, CliError> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    ext.parse()
        .map_err(|_| usage(format!("cannot tell the format of {} from its extension; pass --format", path.display())))
}

fn cmd_ingest(
    input: &Path,
    format: Option<RuleFormat>,
    graph_path: &Path,
    quarantine: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CliResult {
    let format = match format {
        Some(f) => f.into(),
        None => infer_format(input)?,
    };
    let file = std::fs::File::open(input).with_context(|| format!("cannot open {}", input.display()))?;
    let ingested = ingest(file, format).with_context(|| format!("cannot ingest {}", input.display()))?;
    let graph = Graph::build(ingested.batch).context("compiled rules do not form a consistent graph")?;
    let ExportedGraph::Single(bytes) = export_graph(&graph, ExportFormat::Json) else {
        unreachable!("JSON export is one document")
    };
    std::fs::write(graph_path, bytes).with_context(|| format!("cannot write {}", graph_path.display()))?;
    let report = quarantine_report(&ingested.quarantined);
    match quarantine {
        Some(q) => std::fs::write(q, &report).with_context(|| format!("cannot write {}", q.display()))?,
        None if !ingested.quarantined.is_empty() => {
            writeln!(err, "{} rows quarantined (pass --quarantine to keep the report)", ingested.quarantined.len()).map_err(io_err)?;
        }
        None => {}
    }
    let s = graph.stats();
    writeln!(
        out,
        "rules {}\nquarantined {}\nnodes {}\nedges {}\ngroups {}\nderivations {}",
        ingested.asts.len(),
        ingested.quarantined.len(),
        s.node_count,
        s.edge_count,
        graph.groups().len(),
        graph.derivations().len()
    )
    .map_err(io_err)
}

pub fn load_graph(path: &Path) -> anyhow::Result<Graph> {
    let bytes = std::fs::read(path).with_context(|| format!("cannot read graph {}", path.display()))?;
    let format = match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("graphml") => ExportFormat::GraphMl,
        _ => ExportFormat::Json,
    };
    import_graph(&bytes, format).with_context(|| format!("cannot load graph {}", path.display()))
}

fn cmd_query(graph: &Path, text: &str, json: bool, out: &mut dyn Write) -> CliResult {
    let graph = load_graph(graph)?;
    let ast = parse_readonly(text).context("query rejected")?;
    let table = execute_query(&ast, &graph);
    if json {
        writeln!(out, "{}", serde_json::to_string_pretty(&table).context("serialising result")?).map_err(io_err)
    } else {
        write!(out, "{}", table.render_text()).map_err(io_err)
    }
}

fn cmd_recommend(graph: &Path, select: &[u64], category: Option<&str>, json: bool, out: &mut dyn Write) -> CliResult {
    let graph = load_graph(graph)?;
    let config = Configuration::new(&graph, select.iter().map(|&i| NodeId(i))).context("bad selection")?;
    let recs = recommend_for(&graph, &config, category).context("cannot recommend")?;
    if json {
        let value = serde_json::to_string_pretty(&recs).context("serialising result")?;
        return writeln!(out, "{value}").map_err(io_err);
    }
    if recs.is_empty() {
        return writeln!(out, "no recommendations").map_err(io_err);
    }
    for r in &recs {
        writeln!(out, "{}\t{}\t{}", r.candidate.id, r.score, explain_recommendation(&graph, &config, r)).map_err(io_err)?;
    }
    Ok(())
}

fn cmd_validate(graph: &Path, select: &[u64], project: Option<String>, json: bool, out: &mut dyn Write) -> CliResult {
    let graph = load_graph(graph)?;
    let mut config = Configuration::new(&graph, select.iter().map(|&i| NodeId(i))).context("bad selection")?;
    if let Some(p) = project {
        if !select.is_empty() && p != config.project_name {
            return Err(usage(format!("--project {p:?} does not match the selection's project {:?}", config.project_name)));
        }
        config = config.with_project(p);
    }
    let violations = validate_config(&graph, &config);
    if json {
        let value = serde_json::to_string_pretty(&violations).context("serialising result")?;
        return writeln!(out, "{value}").map_err(io_err);
    }
    writeln!(out, "{}", explain_violations(&graph, &violations)).map_err(io_err)
}

fn llm_client(args: &ModelArgs) -> Result<Arc<dyn LlmClient>, CliError> {
    match args.llm {
        LlmKind::Mock => {
            let path = args.script.as_deref().ok_or_else(|| usage("--llm mock needs --script FILE"))?;
            let file = std::fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
            let mock = MockLlm::from_jsonl(std::io::BufReader::new(file))
                .with_context(|| format!("bad mock script {}", path.display()))?;
            Ok(Arc::new(mock))
        }
        LlmKind::Http => Ok(Arc::new(http_client()?)),
    }
}

fn http_client() -> Result<HttpLlmClient, CliError> {
    let config = HttpConfig::from_env().map_err(|e| usage(e.to_string()))?;
    HttpLlmClient::new(config).map_err(|e| usage(e.to_string()))
}

fn embedder(kind: EmbedderKind, dimension: usize) -> Result<Arc<dyn Embedder>, CliError> {
    Ok(match kind {
        EmbedderKind::Local => Arc::new(LocalEmbedder::new(dimension).map_err(|e| usage(e.to_string()))?),
        EmbedderKind::Http => {
            let model = std::env::var("LLM_EMBEDDING_MODEL").unwrap_or_else(|_| DEFAULT_EMBEDDING_MODEL.into());
            Arc::new(HttpEmbedder::new(http_client()?, model, dimension))
        }
    })
}

fn load_store(path: &Path) -> anyhow::Result<VectorStore> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    VectorStore::from_json(&text).with_context(|| format!("bad vector store {}", path.display()))
}

/// Graph, store, model and embedder shared by `chat` and `serve`.
struct Loaded {
    graph: Option<Graph>,
    store: Option<VectorStore>,
    llm: Arc<dyn LlmClient>,
    embedder: Arc<dyn Embedder>,
    config: ChatConfig,
}

fn load_for_chat(graph: Option<&Path>, args: &ModelArgs) -> Result<Loaded, CliError> {
    let llm = llm_client(args)?;
    let graph = graph.map(load_graph).transpose()?;
    let store = args.docs.as_deref().map(load_store).transpose()?;
    let dimension = store.as_ref().map_or(DEFAULT_DIMENSION, |s| s.dimension);
    Ok(Loaded {
        graph,
        store,
        llm,
        embedder: embedder(args.embedder, dimension)?,
        config: ChatConfig {
            llm_answers: args.llm_answers,
            ..ChatConfig::default()
        },
    })
}

fn cmd_chat(
    graph: Option<&Path>,
    args: &ModelArgs,
    mut mode: AgentMode,
    json: bool,
    stdin: &mut dyn BufRead,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CliResult {
    if graph.is_none() && args.docs.is_none() {
        return Err(usage("chat needs --graph, --docs or both"));
    }
    let loaded = load_for_chat(graph, args)?;
    let graph_ctx = loaded.graph.map(GraphContext::new);
    let ctx = ChatContext {
        graph: graph_ctx.as_ref(),
        store: loaded.store.as_ref(),
        embedder: loaded.embedder.as_ref(),
        llm: loaded.llm.as_ref(),
        config: &loaded.config,
    };
    let interactive = std::io::stdin().is_terminal();
    let mut line = String::new();
    loop {
        if interactive {
            write!(err, "{}> ", mode.as_str()).map_err(io_err)?;
            err.flush().map_err(io_err)?;
        }
        line.clear();
        if stdin.read_line(&mut line).map_err(io_err)? == 0 {
            break;
        }
        let question = line.trim();
        if question.is_empty() {
            continue;
        }
        if question == ":quit" || question == ":q" {
            break;
        }
        if let Some(m) = question.strip_prefix(":mode") {
            match m.trim().parse::<AgentMode>() {
                Ok(m) => mode = m,
                Err(e) => writeln!(err, "{e}").map_err(io_err)?,
            }
            continue;
        }
        match chat_turn(question, mode, &ctx) {
            Ok(turn) if json => writeln!(out, "{}", serde_json::to_string(&turn).context("serialising turn")?).map_err(io_err)?,
            Ok(turn) => {
                writeln!(out, "[{}] {}", turn.mode.as_str(), turn.answer).map_err(io_err)?;
                if let Some(t) = &turn.table {
                    write!(out, "{}", t.render_text()).map_err(io_err)?;
                }
                for n in &turn.trace.notices {
                    writeln!(out, "note: {n}").map_err(io_err)?;
                }
            }
            Err(e) => writeln!(err, "error: {e}").map_err(io_err)?,
        }
    }
    Ok(())
}

fn cmd_serve(
    graph: Option<&Path>,
    host: &str,
    port: u16,
    ui_origin: Option<&str>,
    args: &ModelArgs,
    err: &mut dyn Write,
) -> CliResult {
    let loaded = load_for_chat(graph, args)?;
    let mut state = AppState::new(loaded.llm, loaded.embedder)
        .with_chat_config(loaded.config)
        .with_strict_upstream(args.llm == LlmKind::Http);
    if let Some(g) = loaded.graph {
        state = state.with_graph(g);
    }
    if let Some(s) = loaded.store {
        state = state.with_store(s);
    }
    let app = api::router(Arc::new(state), ui_origin);
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .context("cannot start the runtime")?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind((host, port))
            .await
            .with_context(|| format!("cannot listen on {host}:{port}"))?;
        let addr = listener.local_addr().context("listener address")?;
        writeln!(err, "listening on http://{addr}").map_err(io_err)?;
        err.flush().map_err(io_err)?;
        tracing::info!(%addr, "serving");
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .context("server stopped")?;
        Ok(())
    })
}

fn cmd_export(graph: &Path, format: GraphFormat, target: Option<&Path>, out: &mut dyn Write) -> CliResult {
    let graph = load_graph(graph)?;
    let format = match format {
        GraphFormat::Json => ExportFormat::Json,
        GraphFormat::Graphml => ExportFormat::GraphMl,
        GraphFormat::Csv => ExportFormat::CsvPair,
    };
    match (export_graph(&graph, format), target) {
        (ExportedGraph::Single(bytes), None) => out.write_all(&bytes).map_err(io_err),
        (ExportedGraph::Single(bytes), Some(path)) => {
            std::fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
            Ok(())
        }
        (ExportedGraph::CsvPair { nodes, edges }, None) => {
            out.write_all(&nodes).map_err(io_err)?;
            writeln!(out).map_err(io_err)?;
            out.write_all(&edges).map_err(io_err)
        }
        (ExportedGraph::CsvPair { nodes, edges }, Some(dir)) => {
            std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
            std::fs::write(dir.join("nodes.csv"), nodes).context("cannot write nodes.csv")?;
            std::fs::write(dir.join("edges.csv"), edges).context("cannot write edges.csv")?;
            Ok(())
        }
    }
}

fn cmd_index_docs(
    input: &Path,
    store_path: &Path,
    chunk_size: usize,
    overlap: usize,
    dimension: usize,
    kind: EmbedderKind,
    out: &mut dyn Write,
) -> CliResult {
    if overlap >= chunk_size {
        return Err(usage(format!("--overlap {overlap} must be smaller than --chunk-size {chunk_size}")));
    }
    let embedder = embedder(kind, dimension)?;
    let docs = load_documents(input).with_context(|| format!("cannot read documents from {}", input.display()))?;
    if docs.is_empty() {
        return Err(anyhow::anyhow!("no .txt or .md documents in {}", input.display()).into());
    }
    let store = VectorStore::build(&docs, embedder.as_ref(), chunk_size, overlap).context("cannot build the store")?;
    std::fs::write(store_path, store.to_json()).with_context(|| format!("cannot write {}", store_path.display()))?;
    writeln!(out, "indexed {} chunks from {} documents (dimension {})", store.len(), docs.len(), store.dimension).map_err(io_err)
}
