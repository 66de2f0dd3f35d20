//! Embedded property graph of components and polarity edges.
//!
//! A [`Graph`] is an immutable snapshot built from a [`GraphBatch`]. Nodes are
//! keyed by `(normalized name, project_name)`; duplicate nodes merge into the
//! first one seen and duplicate `(src, dst, polarity)` edges collapse.

mod index;
mod io;
mod model;

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::rules::{normalize_rule_text, Polarity};

pub use io::{export_graph, import_csv_pair, import_graph, ExportFormat, ExportedGraph, GraphDocument};
pub use model::{
    CompatEdge, ComponentNode, Derivation, Direction, GraphBatch, GraphStats, NodeAttribute, NodeId,
    RuleText, SelectGroup,
};

use index::TrigramIndex;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph is inconsistent: {}", .0.join("; "))]
    Consistency(Vec<String>),
    #[error("node {0} not found")]
    NodeNotFound(NodeId),
    #[error("unknown node attribute {0:?}")]
    UnknownAttribute(String),
    #[error("malformed {format} document at {location}: {message}")]
    Malformed {
        format: &'static str,
        location: String,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Case-insensitive substring predicate on one node attribute.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contains {
    pub attribute: NodeAttribute,
    pub needle: String,
}

impl Contains {
    pub fn new(attribute: NodeAttribute, needle: impl Into<String>) -> Self {
        Self {
            attribute,
            needle: needle.into(),
        }
    }

    pub fn matches(&self, node: &ComponentNode) -> bool {
        contains_ci(&self.attribute.value(node), &self.needle)
    }
}

/// Per-character lower-casing, shared by the index and by direct matching.
pub(crate) fn fold_case(s: &str) -> String {
    s.chars().flat_map(char::to_lowercase).collect()
}

pub(crate) fn contains_ci(haystack: &str, needle: &str) -> bool {
    fold_case(haystack).contains(&fold_case(needle))
}

#[derive(Debug, Clone)]
pub struct Graph {
    nodes: Vec<ComponentNode>,
    edges: Vec<CompatEdge>,
    groups: Vec<SelectGroup>,
    derivations: Vec<Derivation>,
    rules: Vec<RuleText>,
    slot_of: HashMap<NodeId, usize>,
    key_of: HashMap<(String, String), NodeId>,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
    name_index: TrigramIndex,
    project_index: TrigramIndex,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes
            && self.edges == other.edges
            && self.groups == other.groups
            && self.derivations == other.derivations
            && self.rules == other.rules
    }
}

impl Eq for Graph {}

fn node_key(name: &str, project: &str) -> (String, String) {
    (normalize_rule_text(name), project.to_string())
}

impl Graph {
    pub fn empty() -> Self {
        Self::build(GraphBatch::default()).expect("empty batch is consistent")
    }

    /// Builds a snapshot, merging duplicate nodes and edges.
    pub fn build(batch: GraphBatch) -> Result<Self, GraphError> {
        let mut problems = Vec::new();
        let mut nodes: Vec<ComponentNode> = Vec::with_capacity(batch.nodes.len());
        let mut key_of: HashMap<(String, String), NodeId> = HashMap::new();
        let mut remap: HashMap<NodeId, NodeId> = HashMap::new();
        let mut id_key: HashMap<NodeId, (String, String)> = HashMap::new();

        for node in batch.nodes {
            if node.name.trim().is_empty() {
                problems.push(format!("node {} has an empty name", node.id));
                continue;
            }
            let key = node_key(&node.name, &node.project_name);
            if let Some(prev) = id_key.get(&node.id) {
                if *prev != key {
                    problems.push(format!("node id {} is used by two different components", node.id));
                }
                continue;
            }
            id_key.insert(node.id, key.clone());
            match key_of.get(&key) {
                Some(&first) => {
                    remap.insert(node.id, first);
                }
                None => {
                    key_of.insert(key, node.id);
                    remap.insert(node.id, node.id);
                    nodes.push(node);
                }
            }
        }

        let resolve = |id: NodeId, what: &str, problems: &mut Vec<String>| -> Option<NodeId> {
            let r = remap.get(&id).copied();
            if r.is_none() {
                problems.push(format!("{what} references missing node {id}"));
            }
            r
        };

        let mut seen_edges = HashSet::new();
        let mut edges = Vec::with_capacity(batch.edges.len());
        for edge in batch.edges {
            let what = format!("edge {}->{}", edge.src, edge.dst);
            let src = resolve(edge.src, &what, &mut problems);
            let dst = resolve(edge.dst, &what, &mut problems);
            let (Some(src), Some(dst)) = (src, dst) else { continue };
            if seen_edges.insert((src, dst, edge.polarity)) {
                edges.push(CompatEdge { src, dst, ..edge });
            }
        }

        let mut groups = Vec::with_capacity(batch.groups.len());
        for group in batch.groups {
            let what = format!("group of rule {}", group.rule_index);
            let mut members = Vec::new();
            for id in &group.member_ids {
                if let Some(id) = resolve(*id, &what, &mut problems) {
                    if !members.contains(&id) {
                        members.push(id);
                    }
                }
            }
            if members.is_empty() {
                problems.push(format!("{what} has no members"));
            }
            groups.push(SelectGroup { member_ids: members, ..group });
        }

        let mut derivations = Vec::with_capacity(batch.derivations.len());
        for d in batch.derivations {
            let what = format!("derivation of rule {}", d.rule_index);
            let consequent = resolve(d.consequent, &what, &mut problems);
            let antecedents: Vec<Vec<NodeId>> = d
                .antecedents
                .iter()
                .map(|conj| conj.iter().filter_map(|id| resolve(*id, &what, &mut problems)).collect())
                .collect();
            if antecedents.is_empty() || antecedents.iter().any(Vec::is_empty) {
                problems.push(format!("{what} has an empty antecedent"));
            }
            if let Some(consequent) = consequent {
                derivations.push(Derivation { consequent, antecedents, ..d });
            }
        }

        let mut rules = batch.rules;
        rules.sort_by(|a, b| (&a.project_name, a.rule_index).cmp(&(&b.project_name, b.rule_index)));
        rules.dedup_by(|b, a| a.project_name == b.project_name && a.rule_index == b.rule_index);

        if !problems.is_empty() {
            return Err(GraphError::Consistency(problems));
        }
        let mut graph = Self::index(nodes, edges, groups, derivations, key_of);
        graph.rules = rules;
        Ok(graph)
    }

    fn index(
        nodes: Vec<ComponentNode>,
        edges: Vec<CompatEdge>,
        groups: Vec<SelectGroup>,
        derivations: Vec<Derivation>,
        key_of: HashMap<(String, String), NodeId>,
    ) -> Self {
        let slot_of: HashMap<NodeId, usize> = nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
        let mut out_edges = vec![Vec::new(); nodes.len()];
        let mut in_edges = vec![Vec::new(); nodes.len()];
        for (i, e) in edges.iter().enumerate() {
            out_edges[slot_of[&e.src]].push(i);
            in_edges[slot_of[&e.dst]].push(i);
        }
        let mut name_index = TrigramIndex::default();
        let mut project_index = TrigramIndex::default();
        for (slot, node) in nodes.iter().enumerate() {
            name_index.insert(slot as u32, &node.name);
            project_index.insert(slot as u32, &node.project_name);
        }
        Self {
            nodes,
            edges,
            groups,
            derivations,
            rules: Vec::new(),
            slot_of,
            key_of,
            out_edges,
            in_edges,
            name_index,
            project_index,
        }
    }

    pub fn nodes(&self) -> &[ComponentNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[CompatEdge] {
        &self.edges
    }

    pub fn groups(&self) -> &[SelectGroup] {
        &self.groups
    }

    pub fn derivations(&self) -> &[Derivation] {
        &self.derivations
    }

    pub fn node(&self, id: NodeId) -> Option<&ComponentNode> {
        self.slot_of.get(&id).map(|&i| &self.nodes[i])
    }

    pub fn require(&self, id: NodeId) -> Result<&ComponentNode, GraphError> {
        self.node(id).ok_or(GraphError::NodeNotFound(id))
    }

    pub fn lookup(&self, name: &str, project: &str) -> Option<&ComponentNode> {
        self.key_of.get(&node_key(name, project)).and_then(|id| self.node(*id))
    }

    /// Nodes satisfying every predicate, sorted by `(name, project_name)`.
    pub fn find_nodes(&self, predicates: &[Contains]) -> Vec<&ComponentNode> {
        let mut candidates: Option<Vec<u32>> = None;
        for p in predicates {
            let index = match p.attribute {
                NodeAttribute::Name => &self.name_index,
                NodeAttribute::ProjectName => &self.project_index,
                _ => continue,
            };
            if let Some(found) = index.candidates(&p.needle) {
                candidates = Some(match candidates {
                    None => found,
                    Some(mut acc) => {
                        acc.retain(|s| found.binary_search(s).is_ok());
                        acc
                    }
                });
            }
        }
        let pool: Box<dyn Iterator<Item = &ComponentNode>> = match candidates {
            Some(slots) => Box::new(slots.into_iter().map(|s| &self.nodes[s as usize])),
            None => Box::new(self.nodes.iter()),
        };
        let mut out: Vec<&ComponentNode> = pool.filter(|n| predicates.iter().all(|p| p.matches(n))).collect();
        sort_nodes(&mut out);
        out
    }

    /// Parses `(attribute, needle)` pairs and runs [`Graph::find_nodes`].
    pub fn find_nodes_by(&self, predicates: &[(&str, &str)]) -> Result<Vec<&ComponentNode>, GraphError> {
        let parsed = predicates
            .iter()
            .map(|(a, n)| Ok(Contains::new(a.parse()?, *n)))
            .collect::<Result<Vec<_>, GraphError>>()?;
        Ok(self.find_nodes(&parsed))
    }

    /// Incident edges with the node at the far end, ordered by that node's name.
    pub fn neighbors(
        &self,
        id: NodeId,
        polarity: Option<Polarity>,
        direction: Direction,
    ) -> Result<Vec<(&CompatEdge, &ComponentNode)>, GraphError> {
        let slot = *self.slot_of.get(&id).ok_or(GraphError::NodeNotFound(id))?;
        let mut edge_ids: Vec<usize> = Vec::new();
        if matches!(direction, Direction::Out | Direction::Both) {
            edge_ids.extend(&self.out_edges[slot]);
        }
        if matches!(direction, Direction::In | Direction::Both) {
            edge_ids.extend(&self.in_edges[slot]);
        }
        edge_ids.sort_unstable();
        edge_ids.dedup();
        let mut out: Vec<(&CompatEdge, &ComponentNode)> = edge_ids
            .into_iter()
            .map(|i| &self.edges[i])
            .filter(|e| polarity.is_none_or(|p| e.polarity == p))
            .map(|e| {
                let other = if e.src == id { e.dst } else { e.src };
                (e, &self.nodes[self.slot_of[&other]])
            })
            .collect();
        out.sort_by(|(ea, na), (eb, nb)| {
            (&na.name, &na.project_name, na.id, ea.src, ea.dst, ea.polarity)
                .cmp(&(&nb.name, &nb.project_name, nb.id, eb.src, eb.dst, eb.polarity))
        });
        Ok(out)
    }

    pub fn stats(&self) -> GraphStats {
        let mut stats = GraphStats {
            node_count: self.nodes.len(),
            edge_count: self.edges.len(),
            ..GraphStats::default()
        };
        for n in &self.nodes {
            *stats.nodes_by_rule_type.entry(n.rule_type).or_default() += 1;
        }
        for e in &self.edges {
            *stats.edges_by_polarity.entry(e.polarity).or_default() += 1;
        }
        stats
    }

    pub fn to_batch(&self) -> GraphBatch {
        GraphBatch {
            nodes: self.nodes.clone(),
            edges: self.edges.clone(),
            groups: self.groups.clone(),
            derivations: self.derivations.clone(),
            rules: self.rules.clone(),
        }
    }

    /// Recorded rule texts, sorted by project and rule index.
    pub fn rule_texts(&self) -> &[RuleText] {
        &self.rules
    }

    pub fn rule_text(&self, project: &str, rule_index: u64) -> Option<&str> {
        self.rules
            .binary_search_by(|r| (r.project_name.as_str(), r.rule_index).cmp(&(project, rule_index)))
            .ok()
            .map(|i| self.rules[i].text.as_str())
    }

    /// Node names and project names, the lexicon for keyword extraction.
    pub fn gazetteer_entries(&self) -> (Vec<&str>, Vec<&str>) {
        let mut names: Vec<&str> = self.nodes.iter().map(|n| n.name.as_str()).collect();
        let mut projects: Vec<&str> = self.nodes.iter().map(|n| n.project_name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        projects.sort_unstable();
        projects.dedup();
        (names, projects)
    }
}

pub(crate) fn sort_nodes(nodes: &mut [&ComponentNode]) {
    nodes.sort_by(|a, b| (&a.name, &a.project_name, a.id).cmp(&(&b.name, &b.project_name, b.id)));
}
