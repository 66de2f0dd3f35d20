//! Prompt text sent to the model. Bump the version constant whenever the
//! wording changes; traces record it.

use crate::graph::{Graph, NodeAttribute};
use crate::query::EdgeProperty;

pub const QUERY_PROMPT_VERSION: &str = "query/1";
pub const ANSWER_PROMPT_VERSION: &str = "answer/1";

pub const QUERY_SYSTEM_PROMPT: &str = "\
You translate questions about computer component compatibility rules into one read-only graph query.

Grammar (keywords are case-insensitive):
  MATCH (v[:Component]) [-[e[:SHOULD|:SHOULD_NOT]]-> (w[:Component])] [WHERE cond] RETURN item, ... [LIMIT n]
  The hop may also be written <-[...]- or -[...]- for either direction.
  cond: cond AND cond | cond OR cond | NOT cond | (cond)
        | v.prop CONTAINS 'text' | v.prop = 'text' | v.prop STARTS WITH 'text'
  item: v | v.prop
Comparisons ignore case. Never write CREATE, DELETE, SET, MERGE, REMOVE or DROP.
Reply with the query only, no explanation and no code fences.";

pub const ANSWER_SYSTEM_PROMPT: &str = "\
You summarise query results about computer component compatibility rules for a configuration engineer.
Use only the rows given. Mention how many rows matched and which projects they belong to.
The rows are shown to the user as a table next to your answer, so do not repeat the table.";

/// Property names, relationship types and the project list of a graph.
pub fn schema_summary(graph: &Graph) -> String {
    let node_props: Vec<&str> = NodeAttribute::ALL.iter().map(|a| a.as_str()).collect();
    let edge_props: Vec<&str> = EdgeProperty::ALL.iter().map(|p| p.as_str()).collect();
    let (_, projects) = graph.gazetteer_entries();
    let stats = graph.stats();
    let mut out = String::new();
    out.push_str(&format!("Node label: Component ({} nodes)\n", stats.node_count));
    out.push_str(&format!("Node properties: {}\n", node_props.join(", ")));
    out.push_str(&format!("Relationship types: SHOULD, SHOULD_NOT ({} relationships)\n", stats.edge_count));
    out.push_str(&format!("Relationship properties: {}\n", edge_props.join(", ")));
    out.push_str("Projects: ");
    const SHOWN: usize = 20;
    out.push_str(&projects.iter().take(SHOWN).copied().collect::<Vec<_>>().join("; "));
    if projects.len() > SHOWN {
        out.push_str(&format!("; and {} more", projects.len() - SHOWN));
    }
    out.push('\n');
    out
}
