//! A read-only subset of Cypher: one node pattern with an optional single
//! hop, a boolean `WHERE` over string comparisons, projections and `LIMIT`.

mod ast;
mod exec;
mod lexer;
mod parser;
mod readonly;
mod template;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ast::*;
pub use exec::execute_query;
pub use parser::parse_query;
pub use readonly::{assert_readonly, WRITE_KEYWORDS};
pub use template::{keyword_template_ast, keyword_template_query, TEMPLATE_COLUMNS};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("unbound variable `{name}` at line {line}, column {column}")]
    UnboundVariable { name: String, line: usize, column: usize },
    #[error("unknown property `{var}.{property}` at line {line}, column {column}")]
    UnknownProperty {
        var: String,
        property: String,
        line: usize,
        column: usize,
    },
    #[error("write clause {keyword} at line {line}, column {column} is not allowed")]
    WriteClause { keyword: String, line: usize, column: usize },
    #[error("no keywords to build a query from")]
    EmptyKeywords,
}

impl QueryError {
    pub(crate) fn syntax(line: usize, column: usize, message: impl Into<String>) -> Self {
        QueryError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }
}

/// Checks for write clauses, then parses.
pub fn parse_readonly(text: &str) -> Result<QueryAst, QueryError> {
    assert_readonly(text)?;
    parse_query(text)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl ResultTable {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Plain-text rendering with padded columns.
    pub fn render_text(&self) -> String {
        let clean = |s: &str| s.replace(['\n', '\t'], " ");
        let mut widths: Vec<usize> = self.columns.iter().map(|c| c.chars().count()).collect();
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(clean(cell).chars().count());
            }
        }
        let line = |cells: &mut dyn Iterator<Item = String>| {
            let padded: Vec<String> = cells
                .zip(&widths)
                .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
                .collect();
            padded.join(" | ").trim_end().to_string()
        };
        let mut out = line(&mut self.columns.iter().cloned());
        out.push('\n');
        out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("-+-"));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&line(&mut row.iter().map(|c| clean(c))));
            out.push('\n');
        }
        out.push_str(&format!("({} row{})\n", self.rows.len(), if self.rows.len() == 1 { "" } else { "s" }));
        out
    }
}
