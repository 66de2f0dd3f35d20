//! JSON, GraphML and CSV-pair serialisation of graph snapshots.
//!
//! JSON is lossless. GraphML and CSV carry nodes and edges only; select
//! groups, derivations and rule texts are JSON-only.

use std::collections::HashMap;
use std::str::FromStr;

use chrono::NaiveDate;
use quick_xml::events::{BytesDecl, BytesStart, BytesText, Event};
use quick_xml::{Reader, Writer};
use serde::{Deserialize, Serialize};

use super::model::*;
use super::{Graph, GraphError};
use crate::rules::{Polarity, RuleType};

pub const GRAPHML_NS: &str = "http://graphml.graphdrawing.org/xmlns";

/// Node data keys, in declaration order.
pub const NODE_KEYS: [(&str, &str); 8] = [
    ("name", "string"),
    ("original_rule", "string"),
    ("rule_index", "long"),
    ("rule_type", "string"),
    ("project_name", "string"),
    ("date", "string"),
    ("owner", "string"),
    ("category", "string"),
];

pub const EDGE_KEYS: [(&str, &str); 2] = [("polarity", "string"), ("provenance_rule_index", "long")];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Json,
    GraphMl,
    CsvPair,
}

impl FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ExportFormat::Json),
            "graphml" => Ok(ExportFormat::GraphMl),
            "csv" | "csvpair" | "csv-pair" => Ok(ExportFormat::CsvPair),
            _ => Err(format!("unknown graph format {s:?} (expected json, graphml or csv)")),
        }
    }
}

/// The serialised form of one export.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExportedGraph {
    Single(Vec<u8>),
    CsvPair { nodes: Vec<u8>, edges: Vec<u8> },
}

/// On-disk JSON layout.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub nodes: Vec<ComponentNode>,
    pub edges: Vec<CompatEdge>,
    #[serde(default)]
    pub groups: Vec<SelectGroup>,
    #[serde(default)]
    pub derivations: Vec<Derivation>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rules: Vec<RuleText>,
}

pub fn export_graph(graph: &Graph, format: ExportFormat) -> ExportedGraph {
    match format {
        ExportFormat::Json => ExportedGraph::Single(export_json(graph)),
        ExportFormat::GraphMl => ExportedGraph::Single(export_graphml(graph)),
        ExportFormat::CsvPair => {
            let (nodes, edges) = export_csv(graph);
            ExportedGraph::CsvPair { nodes, edges }
        }
    }
}

pub fn import_graph(bytes: &[u8], format: ExportFormat) -> Result<Graph, GraphError> {
    match format {
        ExportFormat::Json => import_json(bytes),
        ExportFormat::GraphMl => import_graphml(bytes),
        ExportFormat::CsvPair => Err(GraphError::Malformed {
            format: "csv",
            location: "input".to_string(),
            message: "CSV graphs come as two files; use import_csv_pair".to_string(),
        }),
    }
}

fn export_json(graph: &Graph) -> Vec<u8> {
    let doc = GraphDocument {
        nodes: graph.nodes().to_vec(),
        edges: graph.edges().to_vec(),
        groups: graph.groups().to_vec(),
        derivations: graph.derivations().to_vec(),
        rules: graph.rule_texts().to_vec(),
    };
    let mut out = serde_json::to_vec_pretty(&doc).expect("graph document serialises");
    out.push(b'\n');
    out
}

fn import_json(bytes: &[u8]) -> Result<Graph, GraphError> {
    let doc: GraphDocument = serde_json::from_slice(bytes).map_err(|e| GraphError::Malformed {
        format: "json",
        location: format!("line {} column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    Graph::build(GraphBatch {
        nodes: doc.nodes,
        edges: doc.edges,
        groups: doc.groups,
        derivations: doc.derivations,
        rules: doc.rules,
    })
}

fn node_values(node: &ComponentNode) -> [String; 8] {
    [
        node.name.clone(),
        node.original_rule.clone(),
        node.rule_index.to_string(),
        node.rule_type.as_str().to_string(),
        node.project_name.clone(),
        node.date.format("%Y-%m-%d").to_string(),
        node.owner.clone(),
        node.category.clone(),
    ]
}

fn export_graphml(graph: &Graph) -> Vec<u8> {
    let mut w = Writer::new_with_indent(Vec::new(), b' ', 2);
    let io = |r: std::io::Result<()>| r.expect("writing to a Vec cannot fail");
    io(w.write_event(Event::Decl(BytesDecl::new("1.0", Some("UTF-8"), None))));
    let root = BytesStart::new("graphml").with_attributes([
        ("xmlns", GRAPHML_NS),
        ("xmlns:xsi", "http://www.w3.org/2001/XMLSchema-instance"),
        (
            "xsi:schemaLocation",
            "http://graphml.graphdrawing.org/xmlns http://graphml.graphdrawing.org/xmlns/1.0/graphml.xsd",
        ),
    ]);
    io(w.write_event(Event::Start(root)));
    for (domain, keys) in [("node", &NODE_KEYS[..]), ("edge", &EDGE_KEYS[..])] {
        for (name, ty) in keys {
            let key = BytesStart::new("key").with_attributes([
                ("id", *name),
                ("for", domain),
                ("attr.name", *name),
                ("attr.type", *ty),
            ]);
            io(w.write_event(Event::Empty(key)));
        }
    }
    let g = BytesStart::new("graph").with_attributes([("id", "G"), ("edgedefault", "directed")]);
    io(w.write_event(Event::Start(g)));
    for node in graph.nodes() {
        let id = format!("n{}", node.id);
        io(w.write_event(Event::Start(BytesStart::new("node").with_attributes([("id", id.as_str())]))));
        for ((key, _), value) in NODE_KEYS.iter().zip(node_values(node)) {
            write_data(&mut w, key, &value);
        }
        io(w.write_event(Event::End(quick_xml::events::BytesEnd::new("node"))));
    }
    for (i, edge) in graph.edges().iter().enumerate() {
        let id = format!("e{i}");
        let src = format!("n{}", edge.src);
        let dst = format!("n{}", edge.dst);
        let start = BytesStart::new("edge").with_attributes([
            ("id", id.as_str()),
            ("source", src.as_str()),
            ("target", dst.as_str()),
        ]);
        io(w.write_event(Event::Start(start)));
        write_data(&mut w, "polarity", edge.polarity.as_str());
        write_data(&mut w, "provenance_rule_index", &edge.provenance_rule_index.to_string());
        io(w.write_event(Event::End(quick_xml::events::BytesEnd::new("edge"))));
    }
    io(w.write_event(Event::End(quick_xml::events::BytesEnd::new("graph"))));
    io(w.write_event(Event::End(quick_xml::events::BytesEnd::new("graphml"))));
    let mut out = w.into_inner();
    out.push(b'\n');
    out
}

fn write_data(w: &mut Writer<Vec<u8>>, key: &str, value: &str) {
    w.create_element("data")
        .with_attribute(("key", key))
        .write_text_content(BytesText::new(value))
        .expect("writing to a Vec cannot fail");
}

fn malformed(format: &'static str, location: impl Into<String>, message: impl Into<String>) -> GraphError {
    GraphError::Malformed {
        format,
        location: location.into(),
        message: message.into(),
    }
}

#[derive(Default)]
struct PendingElement {
    id: String,
    source: String,
    target: String,
    data: HashMap<String, String>,
}

fn import_graphml(bytes: &[u8]) -> Result<Graph, GraphError> {
    let mut reader = Reader::from_reader(bytes);
    reader.config_mut().trim_text(true);
    let mut buf = Vec::new();
    let mut key_names: HashMap<String, String> = HashMap::new();
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut current: Option<(bool, PendingElement)> = None;
    let mut data_key: Option<String> = None;
    let mut saw_root = false;
    let mut depth = 0usize;

    let attr = |e: &BytesStart, name: &str| -> Option<String> {
        e.try_get_attribute(name)
            .ok()
            .flatten()
            .and_then(|a| a.unescape_value().ok().map(|v| v.into_owned()))
    };

    loop {
        let pos = reader.buffer_position();
        let event = reader
            .read_event_into(&mut buf)
            .map_err(|e| malformed("graphml", format!("byte {}", reader.error_position()), e.to_string()))?;
        let at = || format!("byte {pos}");
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let empty = matches!(event, Event::Empty(_));
                if !empty {
                    depth += 1;
                }
                match e.local_name().as_ref() {
                    b"graphml" => saw_root = true,
                    b"key" => {
                        let id = attr(e, "id").ok_or_else(|| malformed("graphml", at(), "key without id"))?;
                        let name = attr(e, "attr.name").unwrap_or_else(|| id.clone());
                        key_names.insert(id, name);
                    }
                    b"node" | b"edge" => {
                        let is_node = e.local_name().as_ref() == b"node";
                        let pending = PendingElement {
                            id: attr(e, "id").unwrap_or_default(),
                            source: attr(e, "source").unwrap_or_default(),
                            target: attr(e, "target").unwrap_or_default(),
                            data: HashMap::new(),
                        };
                        if empty {
                            finish(is_node, pending, &mut nodes, &mut edges, &at())?;
                        } else {
                            current = Some((is_node, pending));
                        }
                    }
                    b"data" => {
                        let key = attr(e, "key").ok_or_else(|| malformed("graphml", at(), "data without key"))?;
                        let name = key_names.get(&key).cloned().unwrap_or(key);
                        if empty {
                            if let Some((_, p)) = current.as_mut() {
                                p.data.insert(name, String::new());
                            }
                        } else {
                            data_key = Some(name);
                        }
                    }
                    _ => {}
                }
            }
            Event::Text(t) => {
                if let (Some(key), Some((_, p))) = (data_key.as_ref(), current.as_mut()) {
                    let text = t.unescape().map_err(|e| malformed("graphml", at(), e.to_string()))?;
                    p.data.entry(key.clone()).or_default().push_str(&text);
                }
            }
            Event::CData(t) => {
                if let (Some(key), Some((_, p))) = (data_key.as_ref(), current.as_mut()) {
                    p.data
                        .entry(key.clone())
                        .or_default()
                        .push_str(&String::from_utf8_lossy(&t.into_inner()));
                }
            }
            Event::End(e) => {
                depth = depth.saturating_sub(1);
                match e.local_name().as_ref() {
                    b"data" => {
                        if let (Some(key), Some((_, p))) = (data_key.take(), current.as_mut()) {
                            p.data.entry(key).or_default();
                        }
                    }
                    b"node" | b"edge" => {
                        if let Some((is_node, p)) = current.take() {
                            finish(is_node, p, &mut nodes, &mut edges, &at())?;
                        }
                    }
                    _ => {}
                }
            }
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    if !saw_root {
        return Err(malformed("graphml", "document", "missing <graphml> root element"));
    }
    if depth != 0 {
        return Err(malformed("graphml", format!("byte {}", reader.buffer_position()), "unexpected end of document"));
    }
    Graph::build(GraphBatch {
        nodes,
        edges,
        ..Default::default()
    })
}

fn parse_node_ref(raw: &str, at: &str) -> Result<NodeId, GraphError> {
    raw.strip_prefix('n')
        .unwrap_or(raw)
        .parse()
        .map_err(|_| malformed("graphml", at, format!("node id {raw:?} is not numeric")))
}

fn finish(
    is_node: bool,
    p: PendingElement,
    nodes: &mut Vec<ComponentNode>,
    edges: &mut Vec<CompatEdge>,
    at: &str,
) -> Result<(), GraphError> {
    let get = |k: &str| p.data.get(k).cloned().unwrap_or_default();
    let bad = |k: &str| malformed("graphml", at, format!("bad {k} value {:?}", get(k)));
    if is_node {
        nodes.push(ComponentNode {
            id: parse_node_ref(&p.id, at)?,
            name: get("name"),
            original_rule: get("original_rule"),
            rule_index: get("rule_index").parse().map_err(|_| bad("rule_index"))?,
            rule_type: get("rule_type").parse::<RuleType>().map_err(|_| bad("rule_type"))?,
            project_name: get("project_name"),
            date: NaiveDate::parse_from_str(&get("date"), "%Y-%m-%d").map_err(|_| bad("date"))?,
            owner: get("owner"),
            category: get("category"),
        });
    } else {
        edges.push(CompatEdge {
            src: parse_node_ref(&p.source, at)?,
            dst: parse_node_ref(&p.target, at)?,
            polarity: get("polarity").parse::<Polarity>().map_err(|_| bad("polarity"))?,
            provenance_rule_index: get("provenance_rule_index")
                .parse()
                .map_err(|_| bad("provenance_rule_index"))?,
        });
    }
    Ok(())
}

fn export_csv(graph: &Graph) -> (Vec<u8>, Vec<u8>) {
    let mut nodes = csv::Writer::from_writer(Vec::new());
    for node in graph.nodes() {
        nodes.serialize(node).expect("csv write to Vec");
    }
    if graph.nodes().is_empty() {
        let mut header = vec!["id"];
        header.extend(NODE_KEYS.iter().map(|(k, _)| *k));
        nodes.write_record(&header).expect("csv write to Vec");
    }
    let mut edges = csv::Writer::from_writer(Vec::new());
    for edge in graph.edges() {
        edges.serialize(edge).expect("csv write to Vec");
    }
    if graph.edges().is_empty() {
        edges
            .write_record(["src", "dst", "polarity", "provenance_rule_index"])
            .expect("csv write to Vec");
    }
    (
        nodes.into_inner().expect("flush Vec"),
        edges.into_inner().expect("flush Vec"),
    )
}

pub fn import_csv_pair(nodes_csv: &[u8], edges_csv: &[u8]) -> Result<Graph, GraphError> {
    fn read<T: for<'de> Deserialize<'de>>(bytes: &[u8], what: &'static str) -> Result<Vec<T>, GraphError> {
        csv::Reader::from_reader(bytes)
            .deserialize()
            .collect::<Result<Vec<T>, _>>()
            .map_err(|e| {
                let location = e
                    .position()
                    .map_or_else(|| what.to_string(), |p| format!("{what} line {}", p.line()));
                malformed("csv", location, e.to_string())
            })
    }
    Graph::build(GraphBatch {
        nodes: read(nodes_csv, "nodes.csv")?,
        edges: read(edges_csv, "edges.csv")?,
        ..Default::default()
    })
}
