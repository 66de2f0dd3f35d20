//! Compatibility reasoning over a graph snapshot: recommendations for a
//! partial configuration, validation against every rule class, conflicts
//! and plain-text explanations.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{fold_case, ComponentNode, Direction, Graph, NodeId};
use crate::rules::{Cardinality, Polarity};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecommendError {
    #[error("node {0} not found")]
    NodeNotFound(NodeId),
    #[error("selected nodes span several projects: {0:?}")]
    MixedProjects(Vec<String>),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Configuration {
    /// Empty when nothing is selected and no project was named.
    pub project_name: String,
    pub selected: BTreeSet<NodeId>,
}

impl Configuration {
    /// Checks that every id exists and that all share one project, which
    /// becomes the configuration's project.
    pub fn new(graph: &Graph, selected: impl IntoIterator<Item = NodeId>) -> Result<Self, RecommendError> {
        let selected: BTreeSet<NodeId> = selected.into_iter().collect();
        let mut projects = BTreeSet::new();
        for id in &selected {
            let node = graph.node(*id).ok_or(RecommendError::NodeNotFound(*id))?;
            projects.insert(node.project_name.clone());
        }
        if projects.len() > 1 {
            return Err(RecommendError::MixedProjects(projects.into_iter().collect()));
        }
        Ok(Self {
            project_name: projects.into_iter().next().unwrap_or_default(),
            selected,
        })
    }

    pub fn with_project(mut self, project: impl Into<String>) -> Self {
        self.project_name = project.into();
        self
    }

    fn check(&self, graph: &Graph) -> Result<(), RecommendError> {
        match self.selected.iter().find(|id| graph.node(**id).is_none()) {
            Some(id) => Err(RecommendError::NodeNotFound(*id)),
            None => Ok(()),
        }
    }

    fn in_scope(&self, project: &str) -> bool {
        self.project_name.is_empty() || self.project_name == project
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recommendation {
    pub candidate: ComponentNode,
    pub score: usize,
    /// Provenance of each supporting edge, one entry per edge.
    pub supporting_rules: Vec<u64>,
    pub conflicting_rules: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ViolationKind {
    ShouldNotEdge,
    MissingDerive,
    GroupCardinality,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub involved: Vec<NodeId>,
    pub rule_index: u64,
    pub message: String,
}

fn name(graph: &Graph, id: NodeId) -> &str {
    graph.node(id).map_or("?", |n| n.name.as_str())
}

/// One-hop `Should` neighbours of the selection, dropping anything joined to
/// a selected node by a `ShouldNot` edge. Score counts supporting edges.
pub fn recommend_for(
    graph: &Graph,
    config: &Configuration,
    target_category: Option<&str>,
) -> Result<Vec<Recommendation>, RecommendError> {
    config.check(graph)?;
    let mut support: BTreeMap<NodeId, Vec<u64>> = BTreeMap::new();
    let mut blocked: BTreeSet<NodeId> = BTreeSet::new();
    for &s in &config.selected {
        let incident = graph.neighbors(s, None, Direction::Both).map_err(|_| RecommendError::NodeNotFound(s))?;
        for (edge, other) in incident {
            match edge.polarity {
                Polarity::Should => support.entry(other.id).or_default().push(edge.provenance_rule_index),
                Polarity::ShouldNot => {
                    blocked.insert(other.id);
                }
            }
        }
    }
    let category = target_category.map(fold_case);
    let mut out: Vec<Recommendation> = support
        .into_iter()
        .filter(|(id, _)| !config.selected.contains(id) && !blocked.contains(id))
        .filter_map(|(id, mut rules)| {
            let node = graph.node(id)?;
            if category.as_ref().is_some_and(|c| fold_case(&node.category) != *c) {
                return None;
            }
            rules.sort_unstable();
            Some(Recommendation {
                candidate: node.clone(),
                score: rules.len(),
                supporting_rules: rules,
                conflicting_rules: Vec::new(),
            })
        })
        .collect();
    out.sort_by(|a, b| {
        b.score
            .cmp(&a.score)
            .then_with(|| a.candidate.name.cmp(&b.candidate.name))
            .then_with(|| a.candidate.id.cmp(&b.candidate.id))
    });
    Ok(out)
}

fn cardinality_phrase(c: Cardinality) -> &'static str {
    match c {
        Cardinality::ExactlyOne => "exactly one",
        Cardinality::ZeroOrOne => "at most one",
    }
}

/// Every violated rule, ordered by rule index.
pub fn validate_config(graph: &Graph, config: &Configuration) -> Vec<Violation> {
    let sel = &config.selected;
    let mut out = Vec::new();

    for e in graph.edges() {
        if e.polarity == Polarity::ShouldNot && sel.contains(&e.src) && sel.contains(&e.dst) {
            let mut involved = vec![e.src];
            if e.dst != e.src {
                involved.push(e.dst);
            }
            out.push(Violation {
                kind: ViolationKind::ShouldNotEdge,
                message: format!(
                    "{} should not be combined with {}",
                    name(graph, e.src),
                    name(graph, e.dst)
                ),
                involved,
                rule_index: e.provenance_rule_index,
            });
        }
    }

    for d in graph.derivations() {
        if !config.in_scope(&d.project_name) || sel.contains(&d.consequent) {
            continue;
        }
        let satisfied: BTreeSet<NodeId> = d
            .antecedents
            .iter()
            .filter(|conj| !conj.is_empty() && conj.iter().all(|id| sel.contains(id)))
            .flatten()
            .copied()
            .collect();
        if satisfied.is_empty() {
            continue;
        }
        let names: Vec<&str> = satisfied.iter().map(|id| name(graph, *id)).collect();
        let mut involved = vec![d.consequent];
        involved.extend(satisfied.iter().filter(|id| **id != d.consequent));
        out.push(Violation {
            kind: ViolationKind::MissingDerive,
            involved,
            rule_index: d.rule_index,
            message: format!("{} should also select {}", names.join(" + "), name(graph, d.consequent)),
        });
    }

    for g in graph.groups() {
        if !config.in_scope(&g.project_name) {
            continue;
        }
        let chosen: Vec<NodeId> = g.member_ids.iter().copied().filter(|id| sel.contains(id)).collect();
        let (min, max) = g.cardinality.bounds();
        if (min..=max).contains(&chosen.len()) {
            continue;
        }
        let involved = if chosen.is_empty() { g.member_ids.clone() } else { chosen.clone() };
        if involved.is_empty() {
            continue;
        }
        let names: Vec<&str> = involved.iter().map(|id| name(graph, *id)).collect();
        out.push(Violation {
            kind: ViolationKind::GroupCardinality,
            involved,
            rule_index: g.rule_index,
            message: format!(
                "{} group needs {} selected, found {}: {}",
                g.category,
                cardinality_phrase(g.cardinality),
                chosen.len(),
                names.join(", ")
            ),
        });
    }

    out.sort_by(|a, b| (a.rule_index, a.kind, &a.involved).cmp(&(b.rule_index, b.kind, &b.involved)));
    out
}

/// Nodes joined to `id` by a `ShouldNot` edge in either direction.
pub fn conflicts_for(graph: &Graph, id: NodeId) -> Result<Vec<(ComponentNode, u64)>, RecommendError> {
    let incident = graph
        .neighbors(id, Some(Polarity::ShouldNot), Direction::Both)
        .map_err(|_| RecommendError::NodeNotFound(id))?;
    Ok(incident
        .into_iter()
        .map(|(e, n)| (n.clone(), e.provenance_rule_index))
        .collect())
}

pub const CONFIGURATION_VALID: &str = "configuration valid";

/// The rule text recorded for a rule index, preferring the given nodes.
fn rule_text<'g>(graph: &'g Graph, rule_index: u64, near: &[NodeId]) -> Option<&'g str> {
    let nodes: Vec<&ComponentNode> = near.iter().filter_map(|id| graph.node(*id)).collect();
    if let Some(n) = nodes.iter().find(|n| n.rule_index == rule_index) {
        return Some(&n.original_rule);
    }
    let project = nodes.first().map(|n| n.project_name.as_str());
    if let Some(text) = project.and_then(|p| graph.rule_text(p, rule_index)) {
        return Some(text);
    }
    graph
        .nodes()
        .iter()
        .find(|n| n.rule_index == rule_index && project.is_none_or(|p| n.project_name == p))
        .map(|n| n.original_rule.as_str())
}

fn quoted(text: Option<&str>) -> String {
    match text {
        Some(t) => format!("\"{t}\""),
        None => "(rule text unavailable)".to_string(),
    }
}

pub fn explain_violation(graph: &Graph, v: &Violation) -> String {
    let names: Vec<&str> = v.involved.iter().map(|id| name(graph, *id)).collect();
    let head = match v.kind {
        ViolationKind::ShouldNotEdge => format!("Conflict (should not): {}", names.join(" with ")),
        ViolationKind::MissingDerive => {
            format!("Missing required item (should): {} is required by {}", names[0], names[1..].join(" + "))
        }
        ViolationKind::GroupCardinality => format!("Group selection: {}", names.join(", ")),
    };
    format!(
        "{head}. {}. Rule {}: {}",
        v.message,
        v.rule_index,
        quoted(rule_text(graph, v.rule_index, &v.involved))
    )
}

/// One line per violation, or "configuration valid".
pub fn explain_violations(graph: &Graph, violations: &[Violation]) -> String {
    if violations.is_empty() {
        return CONFIGURATION_VALID.to_string();
    }
    violations
        .iter()
        .map(|v| explain_violation(graph, v))
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn explain_recommendation(graph: &Graph, config: &Configuration, rec: &Recommendation) -> String {
    let partners: Vec<NodeId> = config
        .selected
        .iter()
        .copied()
        .filter(|s| {
            graph
                .neighbors(*s, Some(Polarity::Should), Direction::Both)
                .is_ok_and(|ns| ns.iter().any(|(_, n)| n.id == rec.candidate.id))
        })
        .collect();
    let partner_names: Vec<&str> = partners.iter().map(|id| name(graph, *id)).collect();
    let mut rules: Vec<u64> = rec.supporting_rules.clone();
    rules.dedup();
    let mut near = vec![rec.candidate.id];
    near.extend(&partners);
    let quotes: Vec<String> = rules
        .iter()
        .map(|r| format!("rule {r}: {}", quoted(rule_text(graph, *r, &near))))
        .collect();
    format!(
        "{} is recommended (should) with {}; score {} from {}",
        rec.candidate.name,
        partner_names.join(", "),
        rec.score,
        quotes.join("; ")
    )
}
