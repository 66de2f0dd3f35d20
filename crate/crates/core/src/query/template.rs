use super::ast::*;
use super::QueryError;
use crate::graph::NodeAttribute;
use crate::nl::KeywordSet;

/// Columns returned by the keyword template, in order.
pub const TEMPLATE_COLUMNS: [NodeAttribute; 6] = [
    NodeAttribute::Name,
    NodeAttribute::OriginalRule,
    NodeAttribute::ProjectName,
    NodeAttribute::Category,
    NodeAttribute::Owner,
    NodeAttribute::Date,
];

fn any_contains(attribute: NodeAttribute, keys: &[String]) -> Option<Cond> {
    keys.iter()
        .map(|k| {
            Cond::Compare(Comparison {
                left: PropRef {
                    var: "n".to_string(),
                    property: Property::Node(attribute),
                },
                op: CompareOp::Contains,
                literal: k.clone(),
            })
        })
        .reduce(Cond::or)
}

/// The fixed lookup used when no model-generated query is usable: any name
/// key, and any project key, must appear in the respective attribute.
pub fn keyword_template_ast(keywords: &KeywordSet) -> Result<QueryAst, QueryError> {
    let name = any_contains(NodeAttribute::Name, &keywords.name_keys);
    let project = any_contains(NodeAttribute::ProjectName, &keywords.project_keys);
    let condition = match (name, project) {
        (None, None) => return Err(QueryError::EmptyKeywords),
        (Some(a), Some(b)) => Cond::and(a, b),
        (Some(a), None) | (None, Some(a)) => a,
    };
    Ok(QueryAst {
        pattern: MatchPattern {
            start: NodePattern {
                var: "n".to_string(),
                labelled: true,
            },
            hop: None,
        },
        condition: Some(condition),
        returns: TEMPLATE_COLUMNS
            .iter()
            .map(|a| {
                ReturnItem::Property(PropRef {
                    var: "n".to_string(),
                    property: Property::Node(*a),
                })
            })
            .collect(),
        limit: None,
    })
}

pub fn keyword_template_query(keywords: &KeywordSet) -> Result<String, QueryError> {
    keyword_template_ast(keywords).map(|ast| ast.to_string())
}
