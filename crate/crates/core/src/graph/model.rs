use std::borrow::Cow;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::rules::{Cardinality, Polarity, RuleType};

use super::GraphError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for NodeId {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.trim().parse().map(NodeId)
    }
}

/// A component (or attribute pseudo-component) vertex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentNode {
    pub id: NodeId,
    pub name: String,
    pub original_rule: String,
    pub rule_index: u64,
    pub rule_type: RuleType,
    pub project_name: String,
    pub date: NaiveDate,
    pub owner: String,
    pub category: String,
}

/// A polarity-labelled compatibility edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompatEdge {
    pub src: NodeId,
    pub dst: NodeId,
    pub polarity: Polarity,
    pub provenance_rule_index: u64,
}

/// Members of one select rule; cardinality is checked by the recommender.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectGroup {
    pub category: String,
    pub cardinality: Cardinality,
    pub member_ids: Vec<NodeId>,
    pub rule_index: u64,
    pub project_name: String,
}

/// A derive rule over node ids: any satisfied conjunction requires the consequent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Derivation {
    pub consequent: NodeId,
    pub antecedents: Vec<Vec<NodeId>>,
    pub rule_index: u64,
    pub project_name: String,
}

/// Source text of one rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleText {
    pub project_name: String,
    pub rule_index: u64,
    pub text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphBatch {
    pub nodes: Vec<ComponentNode>,
    pub edges: Vec<CompatEdge>,
    #[serde(default)]
    pub groups: Vec<SelectGroup>,
    #[serde(default)]
    pub derivations: Vec<Derivation>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rules: Vec<RuleText>,
}

/// Node fields addressable by lookups and queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeAttribute {
    Id,
    Name,
    OriginalRule,
    RuleIndex,
    RuleType,
    ProjectName,
    Date,
    Owner,
    Category,
}

impl NodeAttribute {
    pub const ALL: [NodeAttribute; 9] = [
        NodeAttribute::Id,
        NodeAttribute::Name,
        NodeAttribute::OriginalRule,
        NodeAttribute::RuleIndex,
        NodeAttribute::RuleType,
        NodeAttribute::ProjectName,
        NodeAttribute::Date,
        NodeAttribute::Owner,
        NodeAttribute::Category,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NodeAttribute::Id => "id",
            NodeAttribute::Name => "name",
            NodeAttribute::OriginalRule => "original_rule",
            NodeAttribute::RuleIndex => "rule_index",
            NodeAttribute::RuleType => "rule_type",
            NodeAttribute::ProjectName => "project_name",
            NodeAttribute::Date => "date",
            NodeAttribute::Owner => "owner",
            NodeAttribute::Category => "category",
        }
    }

    pub fn value(self, node: &ComponentNode) -> Cow<'_, str> {
        match self {
            NodeAttribute::Id => Cow::Owned(node.id.to_string()),
            NodeAttribute::Name => Cow::Borrowed(&node.name),
            NodeAttribute::OriginalRule => Cow::Borrowed(&node.original_rule),
            NodeAttribute::RuleIndex => Cow::Owned(node.rule_index.to_string()),
            NodeAttribute::RuleType => Cow::Borrowed(node.rule_type.as_str()),
            NodeAttribute::ProjectName => Cow::Borrowed(&node.project_name),
            NodeAttribute::Date => Cow::Owned(node.date.format("%Y-%m-%d").to_string()),
            NodeAttribute::Owner => Cow::Borrowed(&node.owner),
            NodeAttribute::Category => Cow::Borrowed(&node.category),
        }
    }
}

impl fmt::Display for NodeAttribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NodeAttribute {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NodeAttribute::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| GraphError::UnknownAttribute(s.to_string()))
    }
}

/// Counts reported for a graph snapshot.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphStats {
    pub node_count: usize,
    pub edge_count: usize,
    pub nodes_by_rule_type: std::collections::BTreeMap<RuleType, usize>,
    pub edges_by_polarity: std::collections::BTreeMap<Polarity, usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Out,
    In,
    Both,
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "out" => Ok(Direction::Out),
            "in" => Ok(Direction::In),
            "both" => Ok(Direction::Both),
            _ => Err(format!("unknown direction {s:?} (expected out, in or both)")),
        }
    }
}
