//! Generators and brute-force oracles shared by the integration tests and
//! the acceptance runner. Oracles deliberately avoid the library's indexes
//! and helpers: they scan everything and compare lower-cased strings.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use chrono::NaiveDate;
use kgrec_core::graph::{CompatEdge, ComponentNode, Derivation, Graph, GraphBatch, NodeAttribute, NodeId, SelectGroup};
use kgrec_core::query::{
    CompareOp, Comparison, Cond, EdgeProperty, Hop, HopDirection, MatchPattern, NodePattern, PropRef, Property,
    QueryAst, RelPattern, ReturnItem,
};
use kgrec_core::recommend::{Configuration, ViolationKind};
use kgrec_core::rules::{Cardinality, Polarity, RuleType};
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

pub fn fixture_graph(name: &str) -> Graph {
    let f = std::fs::File::open(fixture(name)).unwrap();
    let ingested = kgrec_core::rules::ingest(f, kgrec_core::rules::InputFormat::Tsv).unwrap();
    Graph::build(ingested.batch).unwrap()
}

/// Frozen output of fixtures/oracles/corpus_counts.py.
#[derive(Debug, Clone, Copy)]
pub struct CorpusCounts {
    pub records: usize,
    pub load_quarantined: usize,
    pub parse_quarantined: usize,
    pub nodes: usize,
    pub edges: usize,
    pub groups: usize,
    pub derivations: usize,
    pub checkmarks: usize,
}

pub const T3_COUNTS: CorpusCounts = CorpusCounts {
    records: 47,
    load_quarantined: 3,
    parse_quarantined: 4,
    nodes: 64,
    edges: 45,
    groups: 13,
    derivations: 20,
    checkmarks: 33,
};

pub const FIG10_COUNTS: CorpusCounts = CorpusCounts {
    records: 13,
    load_quarantined: 0,
    parse_quarantined: 0,
    nodes: 15,
    edges: 15,
    groups: 2,
    derivations: 5,
    checkmarks: 7,
};

pub const TABLE1_COUNTS: CorpusCounts = CorpusCounts {
    records: 2,
    load_quarantined: 0,
    parse_quarantined: 0,
    nodes: 4,
    edges: 2,
    groups: 0,
    derivations: 0,
    checkmarks: 0,
};

// ---------------------------------------------------------------- graphs

const WORDS: &[&str] = &[
    "RTX3050", "PSU", "180W", "260W", "Kit", "DDR4", "Gen5", "Holder", "SATA", "2TB", "Fan", "Ünïcode", "café",
    "O'Neil", "a\\b", "x",
];
const PROJECTS: &[&str] = &["ThinkCentre M70T Gen5", "YTM400RR", "M90t"];
const CATEGORIES: &[&str] = &["PSU", "VA", "HD-CD", "psu"];

fn random_name(rng: &mut ChaCha8Rng) -> String {
    let n = rng.random_range(1..=3);
    (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

pub fn random_node(rng: &mut ChaCha8Rng, id: u64, projects: &[&str]) -> ComponentNode {
    let rule_type = *[RuleType::Select, RuleType::Derive, RuleType::TextRule].choose(rng).unwrap();
    ComponentNode {
        id: NodeId(id),
        name: format!("{} {}", random_name(rng), id),
        original_rule: random_name(rng),
        rule_index: rng.random_range(0..20),
        rule_type,
        project_name: projects.choose(rng).unwrap().to_string(),
        date: NaiveDate::from_ymd_opt(2024, rng.random_range(1..=12), rng.random_range(1..=28)).unwrap(),
        owner: ["huanghx11", "", "liwei7"].choose(rng).unwrap().to_string(),
        category: CATEGORIES.choose(rng).unwrap().to_string(),
    }
}

/// Random nodes and edges, including self-loops and both polarities on one
/// pair. Ids are sparse so they differ from positions.
pub fn random_batch(rng: &mut ChaCha8Rng, max_nodes: usize, max_edges: usize) -> GraphBatch {
    let n = rng.random_range(0..=max_nodes);
    let nodes: Vec<ComponentNode> = (0..n).map(|i| random_node(rng, i as u64 * 3 + 1, PROJECTS)).collect();
    let mut edges = Vec::new();
    if n > 0 {
        for _ in 0..rng.random_range(0..=max_edges) {
            edges.push(CompatEdge {
                src: nodes[rng.random_range(0..n)].id,
                dst: nodes[rng.random_range(0..n)].id,
                polarity: if rng.random_bool(0.6) { Polarity::Should } else { Polarity::ShouldNot },
                provenance_rule_index: rng.random_range(0..20),
            });
        }
    }
    GraphBatch {
        nodes,
        edges,
        ..Default::default()
    }
}

pub fn random_graph(rng: &mut ChaCha8Rng, max_nodes: usize, max_edges: usize) -> Graph {
    Graph::build(random_batch(rng, max_nodes, max_edges)).unwrap()
}

/// A one-project graph with edges, select groups and derivations.
pub fn random_rule_graph(rng: &mut ChaCha8Rng, max_nodes: usize) -> Graph {
    let n = rng.random_range(1..=max_nodes);
    let project = "P";
    let nodes: Vec<ComponentNode> = (0..n as u64).map(|i| random_node(rng, i, &[project])).collect();
    let ids: Vec<NodeId> = nodes.iter().map(|n| n.id).collect();
    let mut edges = Vec::new();
    for _ in 0..rng.random_range(0..=2 * n) {
        edges.push(CompatEdge {
            src: *ids.choose(rng).unwrap(),
            dst: *ids.choose(rng).unwrap(),
            polarity: if rng.random_bool(0.6) { Polarity::Should } else { Polarity::ShouldNot },
            provenance_rule_index: rng.random_range(0..10),
        });
    }
    let mut groups = Vec::new();
    for _ in 0..rng.random_range(0..=3) {
        let k = rng.random_range(1..=n.min(4));
        groups.push(SelectGroup {
            category: CATEGORIES.choose(rng).unwrap().to_string(),
            cardinality: if rng.random_bool(0.5) { Cardinality::ExactlyOne } else { Cardinality::ZeroOrOne },
            member_ids: ids.choose_multiple(rng, k).copied().collect(),
            rule_index: rng.random_range(0..10),
            project_name: project.into(),
        });
    }
    let mut derivations = Vec::new();
    for _ in 0..rng.random_range(0..=3) {
        let conjunctions = (0..rng.random_range(1..=3))
            .map(|_| {
                let k = rng.random_range(1..=n.min(3));
                ids.choose_multiple(rng, k).copied().collect()
            })
            .collect();
        derivations.push(Derivation {
            consequent: *ids.choose(rng).unwrap(),
            antecedents: conjunctions,
            rule_index: rng.random_range(0..10),
            project_name: project.into(),
        });
    }
    Graph::build(GraphBatch {
        nodes,
        edges,
        groups,
        derivations,
        rules: Vec::new(),
    })
    .unwrap()
}

// --------------------------------------------------------------- queries

fn attribute_text(n: &ComponentNode, a: NodeAttribute) -> String {
    match a {
        NodeAttribute::Id => n.id.0.to_string(),
        NodeAttribute::Name => n.name.clone(),
        NodeAttribute::OriginalRule => n.original_rule.clone(),
        NodeAttribute::RuleIndex => n.rule_index.to_string(),
        NodeAttribute::RuleType => n.rule_type.as_str().to_string(),
        NodeAttribute::ProjectName => n.project_name.clone(),
        NodeAttribute::Date => n.date.to_string(),
        NodeAttribute::Owner => n.owner.clone(),
        NodeAttribute::Category => n.category.clone(),
    }
}

fn edge_text(e: &CompatEdge, p: EdgeProperty) -> String {
    match p {
        EdgeProperty::Src => e.src.0.to_string(),
        EdgeProperty::Dst => e.dst.0.to_string(),
        EdgeProperty::Polarity => e.polarity.as_str().to_string(),
        EdgeProperty::ProvenanceRuleIndex => e.provenance_rule_index.to_string(),
    }
}

/// A literal that often hits: a random slice of a real value, sometimes
/// with its case flipped.
fn random_literal(rng: &mut ChaCha8Rng, sample: Option<String>) -> String {
    match sample {
        Some(s) if rng.random_bool(0.75) => {
            let chars: Vec<char> = s.chars().collect();
            let a = rng.random_range(0..=chars.len());
            let b = rng.random_range(a..=chars.len().min(a + 6));
            let lit: String = chars[a..b].iter().collect();
            if rng.random_bool(0.3) {
                lit.to_uppercase()
            } else {
                lit
            }
        }
        _ => WORDS.choose(rng).unwrap().to_string(),
    }
}

struct VarSet {
    nodes: Vec<String>,
    edge: Option<String>,
}

fn random_comparison(rng: &mut ChaCha8Rng, vars: &VarSet, graph: &Graph) -> Comparison {
    let use_edge = vars.edge.is_some() && rng.random_bool(0.25);
    let op = *[CompareOp::Contains, CompareOp::Equals, CompareOp::StartsWith].choose(rng).unwrap();
    if use_edge {
        let p = *EdgeProperty::ALL.choose(rng).unwrap();
        let sample = graph.edges().choose(rng).map(|e| edge_text(e, p));
        return Comparison {
            left: PropRef {
                var: vars.edge.clone().unwrap(),
                property: Property::Edge(p),
            },
            op,
            literal: random_literal(rng, sample),
        };
    }
    let a = if rng.random_bool(0.5) {
        *[NodeAttribute::Name, NodeAttribute::ProjectName].choose(rng).unwrap()
    } else {
        *NodeAttribute::ALL.choose(rng).unwrap()
    };
    let sample = graph.nodes().choose(rng).map(|n| attribute_text(n, a));
    Comparison {
        left: PropRef {
            var: vars.nodes.choose(rng).unwrap().clone(),
            property: Property::Node(a),
        },
        op,
        literal: random_literal(rng, sample),
    }
}

fn random_cond(rng: &mut ChaCha8Rng, vars: &VarSet, graph: &Graph, depth: u32) -> Cond {
    if depth == 0 || rng.random_bool(0.4) {
        return Cond::Compare(random_comparison(rng, vars, graph));
    }
    match rng.random_range(0..3) {
        0 => Cond::and(random_cond(rng, vars, graph, depth - 1), random_cond(rng, vars, graph, depth - 1)),
        1 => Cond::or(random_cond(rng, vars, graph, depth - 1), random_cond(rng, vars, graph, depth - 1)),
        _ => Cond::not(random_cond(rng, vars, graph, depth - 1)),
    }
}

pub fn random_query(rng: &mut ChaCha8Rng, graph: &Graph) -> QueryAst {
    let start = if rng.random_bool(0.5) { "n" } else { "a" }.to_string();
    let mut vars = VarSet {
        nodes: vec![start.clone()],
        edge: None,
    };
    let hop = rng.random_bool(0.6).then(|| {
        let rel_var = rng.random_bool(0.5).then(|| "e".to_string());
        let end = if rng.random_bool(0.15) { start.clone() } else { "b".to_string() };
        if end != start {
            vars.nodes.push(end.clone());
        }
        vars.edge = rel_var.clone();
        Hop {
            rel: RelPattern {
                var: rel_var,
                polarity: *[None, Some(Polarity::Should), Some(Polarity::ShouldNot)].choose(rng).unwrap(),
                direction: *[HopDirection::Right, HopDirection::Left, HopDirection::Either].choose(rng).unwrap(),
            },
            end: NodePattern {
                var: end,
                labelled: rng.random_bool(0.5),
            },
        }
    });
    let condition = rng.random_bool(0.8).then(|| random_cond(rng, &vars, graph, 3));
    let mut returns = Vec::new();
    for _ in 0..rng.random_range(1..=3) {
        if vars.edge.is_some() && rng.random_bool(0.2) {
            let var = vars.edge.clone().unwrap();
            returns.push(if rng.random_bool(0.3) {
                ReturnItem::Variable(var)
            } else {
                ReturnItem::Property(PropRef {
                    var,
                    property: Property::Edge(*EdgeProperty::ALL.choose(rng).unwrap()),
                })
            });
        } else {
            let var = vars.nodes.choose(rng).unwrap().clone();
            returns.push(if rng.random_bool(0.1) {
                ReturnItem::Variable(var)
            } else {
                ReturnItem::Property(PropRef {
                    var,
                    property: Property::Node(*NodeAttribute::ALL.choose(rng).unwrap()),
                })
            });
        }
    }
    QueryAst {
        pattern: MatchPattern {
            start: NodePattern {
                var: start,
                labelled: rng.random_bool(0.7),
            },
            hop,
        },
        condition,
        returns,
        limit: rng.random_bool(0.3).then(|| rng.random_range(1..=15)),
    }
}

enum Value<'g> {
    Node(&'g ComponentNode),
    Edge(&'g CompatEdge),
}

type Env<'g> = Vec<(String, Value<'g>)>;

fn get<'a, 'g>(env: &'a Env<'g>, var: &str) -> &'a Value<'g> {
    &env.iter().find(|(v, _)| v == var).expect("bound variable").1
}

fn prop_text(env: &Env<'_>, r: &PropRef) -> String {
    match (get(env, &r.var), r.property) {
        (Value::Node(n), Property::Node(a)) => attribute_text(n, a),
        (Value::Edge(e), Property::Edge(p)) => edge_text(e, p),
        _ => panic!("property kind does not match variable kind"),
    }
}

fn holds(c: &Cond, env: &Env<'_>) -> bool {
    match c {
        Cond::Compare(cmp) => {
            let v = prop_text(env, &cmp.left).to_lowercase();
            let lit = cmp.literal.to_lowercase();
            match cmp.op {
                CompareOp::Contains => v.contains(&lit),
                CompareOp::Equals => v == lit,
                CompareOp::StartsWith => v.starts_with(&lit),
            }
        }
        Cond::And(a, b) => holds(a, env) && holds(b, env),
        Cond::Or(a, b) => holds(a, env) || holds(b, env),
        Cond::Not(a) => !holds(a, env),
    }
}

/// Enumerates every node (and every edge for a hop), filters, projects,
/// sorts and truncates.
pub fn brute_query(ast: &QueryAst, graph: &Graph) -> (Vec<String>, Vec<Vec<String>>) {
    let node_by_id = |id: NodeId| graph.nodes().iter().find(|n| n.id == id).unwrap();
    let mut envs: Vec<Env<'_>> = Vec::new();
    for n in graph.nodes() {
        let start = &ast.pattern.start.var;
        let Some(hop) = &ast.pattern.hop else {
            envs.push(vec![(start.clone(), Value::Node(n))]);
            continue;
        };
        for e in graph.edges() {
            if hop.rel.polarity.is_some_and(|p| p != e.polarity) {
                continue;
            }
            let far = match hop.rel.direction {
                HopDirection::Right => (e.src == n.id).then_some(e.dst),
                HopDirection::Left => (e.dst == n.id).then_some(e.src),
                HopDirection::Either => {
                    if e.src == n.id {
                        Some(e.dst)
                    } else if e.dst == n.id {
                        Some(e.src)
                    } else {
                        None
                    }
                }
            };
            let Some(far) = far else { continue };
            let mut env = vec![(start.clone(), Value::Node(n))];
            if hop.end.var == *start {
                if far != n.id {
                    continue;
                }
            } else {
                env.push((hop.end.var.clone(), Value::Node(node_by_id(far))));
            }
            if let Some(v) = &hop.rel.var {
                env.push((v.clone(), Value::Edge(e)));
            }
            envs.push(env);
        }
    }
    let mut rows: Vec<Vec<String>> = envs
        .iter()
        .filter(|env| ast.condition.as_ref().is_none_or(|c| holds(c, env)))
        .map(|env| {
            ast.returns
                .iter()
                .map(|item| match item {
                    ReturnItem::Property(r) => prop_text(env, r),
                    ReturnItem::Variable(v) => match get(env, v) {
                        Value::Node(n) => serde_json::to_string(n).unwrap(),
                        Value::Edge(e) => serde_json::to_string(e).unwrap(),
                    },
                })
                .collect()
        })
        .collect();
    rows.sort();
    if let Some(l) = ast.limit {
        rows.truncate(l as usize);
    }
    let columns = ast.returns.iter().map(|r| r.to_string()).collect();
    (columns, rows)
}

/// Linear scan for `find_nodes`: every predicate is a case-insensitive
/// substring test.
pub fn linear_find(graph: &Graph, predicates: &[(NodeAttribute, String)]) -> Vec<NodeId> {
    let mut hits: Vec<&ComponentNode> = graph
        .nodes()
        .iter()
        .filter(|n| {
            predicates
                .iter()
                .all(|(a, needle)| attribute_text(n, *a).to_lowercase().contains(&needle.to_lowercase()))
        })
        .collect();
    hits.sort_by(|a, b| (&a.name, &a.project_name, a.id).cmp(&(&b.name, &b.project_name, b.id)));
    hits.into_iter().map(|n| n.id).collect()
}

// ----------------------------------------------------------- recommender

/// Expected recommendation: (candidate, sorted supporting provenance).
pub fn oracle_recommend(graph: &Graph, selected: &BTreeSet<NodeId>, category: Option<&str>) -> Vec<(NodeId, Vec<u64>)> {
    let mut out = Vec::new();
    for c in graph.nodes() {
        if selected.contains(&c.id) {
            continue;
        }
        if category.is_some_and(|cat| cat.to_lowercase() != c.category.to_lowercase()) {
            continue;
        }
        let touches = |e: &CompatEdge| {
            (e.src == c.id && selected.contains(&e.dst)) || (e.dst == c.id && selected.contains(&e.src))
        };
        let mut support: Vec<u64> = graph
            .edges()
            .iter()
            .filter(|e| e.polarity == Polarity::Should && touches(e))
            .map(|e| e.provenance_rule_index)
            .collect();
        let blocked = graph.edges().iter().any(|e| e.polarity == Polarity::ShouldNot && touches(e));
        if support.is_empty() || blocked {
            continue;
        }
        support.sort();
        out.push((c.id, support));
    }
    let name = |id: NodeId| graph.nodes().iter().find(|n| n.id == id).unwrap().name.clone();
    out.sort_by(|a, b| {
        b.1.len()
            .cmp(&a.1.len())
            .then_with(|| name(a.0).cmp(&name(b.0)))
            .then_with(|| a.0.cmp(&b.0))
    });
    out
}

/// Expected violations as (rule_index, kind, involved), sorted.
pub fn oracle_validate(graph: &Graph, config: &Configuration) -> Vec<(u64, ViolationKind, Vec<NodeId>)> {
    let sel = &config.selected;
    let scoped = |p: &str| config.project_name.is_empty() || config.project_name == p;
    let mut out = Vec::new();
    for e in graph.edges() {
        if e.polarity == Polarity::ShouldNot && sel.contains(&e.src) && sel.contains(&e.dst) {
            let involved = if e.src == e.dst { vec![e.src] } else { vec![e.src, e.dst] };
            out.push((e.provenance_rule_index, ViolationKind::ShouldNotEdge, involved));
        }
    }
    for d in graph.derivations() {
        if !scoped(&d.project_name) || sel.contains(&d.consequent) {
            continue;
        }
        let mut satisfied = BTreeSet::new();
        for conj in &d.antecedents {
            if conj.iter().all(|id| sel.contains(id)) {
                satisfied.extend(conj.iter().copied());
            }
        }
        if satisfied.is_empty() {
            continue;
        }
        satisfied.remove(&d.consequent);
        let mut involved = vec![d.consequent];
        involved.extend(satisfied);
        out.push((d.rule_index, ViolationKind::MissingDerive, involved));
    }
    for g in graph.groups() {
        if !scoped(&g.project_name) {
            continue;
        }
        let chosen: Vec<NodeId> = g.member_ids.iter().copied().filter(|id| sel.contains(id)).collect();
        let ok = match g.cardinality {
            Cardinality::ExactlyOne => chosen.len() == 1,
            Cardinality::ZeroOrOne => chosen.len() <= 1,
        };
        if !ok {
            let involved = if chosen.is_empty() { g.member_ids.clone() } else { chosen };
            out.push((g.rule_index, ViolationKind::GroupCardinality, involved));
        }
    }
    out.sort();
    out
}

// ------------------------------------------------------------- retrieval

pub fn random_unit_vector(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            return v;
        }
    }
}

/// Full-scan ranking: (doc_id, seq) of the best `k` by cosine, ties by
/// (doc_id, seq).
pub fn brute_topk(entries: &[(String, u64, Vec<f64>)], query: &[f64], k: usize) -> Vec<(String, u64, f64)> {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let qn = norm(query);
    let mut scored: Vec<(String, u64, f64)> = entries
        .iter()
        .map(|(doc, seq, v)| {
            let dot: f64 = v.iter().zip(query).map(|(a, b)| a * b).sum();
            (doc.clone(), *seq, dot / (norm(v) * qn))
        })
        .collect();
    scored.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap().then_with(|| a.0.cmp(&b.0)).then_with(|| a.1.cmp(&b.1)));
    scored.truncate(k);
    scored
}
