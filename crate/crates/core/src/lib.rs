//! Component-compatibility knowledge graph: rule ingestion, an embedded
//! property graph, a read-only query language, compatibility reasoning,
//! natural-language question answering and document retrieval.

pub mod docs;
pub mod graph;
pub mod nl;
pub mod query;
pub mod recommend;
pub mod rules;
