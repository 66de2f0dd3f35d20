//! Rule ingestion: load raw records, normalise, split and parse into ASTs,
//! then compile to a graph batch.

mod ast;
mod compile;
mod load;
mod normalize;
mod parse;
mod record;
mod split;

use thiserror::Error;

pub use ast::*;
pub use compile::{compile_rules, pseudo_node_name};
pub use load::{load_records, InputFormat, LoadOutcome};
pub use normalize::normalize_rule_text;
pub use parse::{parse_derive_rule, parse_record, parse_records, parse_select_rule, parse_text_rule, ParseFailure};
pub use record::{QuarantineStage, QuarantinedRule, RawRuleRecord, RuleType, COLUMNS};
pub use split::{join_atoms, split_compound_rule, Atom, Connective, SplitError};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read rule source: {0}")]
    Io(#[from] std::io::Error),
    #[error("unknown input format {0:?} (expected tsv, csv or jsonl)")]
    UnknownFormat(String),
    #[error("schema error: {0}")]
    Schema(String),
}

/// Everything produced by one ingestion run.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub asts: Vec<RuleAst>,
    pub quarantined: Vec<QuarantinedRule>,
    pub batch: crate::graph::GraphBatch,
}

/// Load, parse and compile in one pass.
pub fn ingest<R: std::io::Read>(source: R, format: InputFormat) -> Result<Ingested, IngestError> {
    let loaded = load_records(source, format)?;
    let (asts, mut rejected) = parse_records(&loaded.records);
    let mut quarantined = loaded.quarantined;
    quarantined.append(&mut rejected);
    let batch = compile_rules(&asts);
    Ok(Ingested {
        asts,
        quarantined,
        batch,
    })
}

/// Quarantine report, one JSON object per line.
pub fn quarantine_report(rules: &[QuarantinedRule]) -> String {
    let mut out = String::new();
    for q in rules {
        out.push_str(&serde_json::to_string(q).expect("quarantine entry serialises"));
        out.push('\n');
    }
    out
}
