use std::borrow::Cow;

use super::ast::*;
use super::ResultTable;
use crate::graph::{contains_ci, fold_case, CompatEdge, ComponentNode, Contains, Direction, Graph, NodeAttribute};

/// One match of the pattern.
#[derive(Clone, Copy)]
struct Binding<'g> {
    start: &'g ComponentNode,
    edge: Option<&'g CompatEdge>,
    end: Option<&'g ComponentNode>,
}

enum Bound<'g> {
    Node(&'g ComponentNode),
    Edge(&'g CompatEdge),
}

impl<'g> Binding<'g> {
    fn lookup(&self, pattern: &MatchPattern, var: &str) -> Bound<'g> {
        if let Some(hop) = &pattern.hop {
            if hop.rel.var.as_deref() == Some(var) {
                return Bound::Edge(self.edge.expect("hop binding has an edge"));
            }
            if hop.end.var == var && pattern.start.var != var {
                return Bound::Node(self.end.expect("hop binding has an end node"));
            }
        }
        Bound::Node(self.start)
    }
}

fn edge_value(edge: &CompatEdge, p: EdgeProperty) -> String {
    match p {
        EdgeProperty::Src => edge.src.to_string(),
        EdgeProperty::Dst => edge.dst.to_string(),
        EdgeProperty::Polarity => edge.polarity.as_str().to_string(),
        EdgeProperty::ProvenanceRuleIndex => edge.provenance_rule_index.to_string(),
    }
}

fn prop_value<'g>(b: &Binding<'g>, pattern: &MatchPattern, r: &PropRef) -> Cow<'g, str> {
    match (b.lookup(pattern, &r.var), r.property) {
        (Bound::Node(n), Property::Node(a)) => a.value(n),
        (Bound::Edge(e), Property::Edge(p)) => Cow::Owned(edge_value(e, p)),
        // The parser only admits node properties on node variables and vice versa.
        _ => Cow::Borrowed(""),
    }
}

fn eval(c: &Cond, b: &Binding<'_>, pattern: &MatchPattern) -> bool {
    match c {
        Cond::Compare(cmp) => {
            let value = prop_value(b, pattern, &cmp.left);
            match cmp.op {
                CompareOp::Contains => contains_ci(&value, &cmp.literal),
                CompareOp::Equals => fold_case(&value) == fold_case(&cmp.literal),
                CompareOp::StartsWith => fold_case(&value).starts_with(&fold_case(&cmp.literal)),
            }
        }
        Cond::And(x, y) => eval(x, b, pattern) && eval(y, b, pattern),
        Cond::Or(x, y) => eval(x, b, pattern) || eval(y, b, pattern),
        Cond::Not(x) => !eval(x, b, pattern),
    }
}

fn project(item: &ReturnItem, b: &Binding<'_>, pattern: &MatchPattern) -> String {
    match item {
        ReturnItem::Property(r) => prop_value(b, pattern, r).into_owned(),
        ReturnItem::Variable(v) => match b.lookup(pattern, v) {
            Bound::Node(n) => serde_json::to_string(n).expect("node serialises"),
            Bound::Edge(e) => serde_json::to_string(e).expect("edge serialises"),
        },
    }
}

/// Start-node candidates narrowed by top-level `CONTAINS` conjuncts on
/// indexed attributes.
fn start_candidates<'g>(ast: &QueryAst, graph: &'g Graph) -> Vec<&'g ComponentNode> {
    let mut predicates = Vec::new();
    if let Some(cond) = &ast.condition {
        for c in cond.conjuncts() {
            if let Cond::Compare(Comparison {
                left: PropRef { var, property: Property::Node(attr @ (NodeAttribute::Name | NodeAttribute::ProjectName)) },
                op: CompareOp::Contains,
                literal,
            }) = c
            {
                if *var == ast.pattern.start.var {
                    predicates.push(Contains::new(*attr, literal.clone()));
                }
            }
        }
    }
    if predicates.is_empty() {
        graph.nodes().iter().collect()
    } else {
        graph.find_nodes(&predicates)
    }
}

/// Runs a parsed query. Rows are sorted by their projected values before
/// `LIMIT` applies.
pub fn execute_query(ast: &QueryAst, graph: &Graph) -> ResultTable {
    let pattern = &ast.pattern;
    let mut bindings: Vec<Binding<'_>> = Vec::new();
    for start in start_candidates(ast, graph) {
        let Some(hop) = &pattern.hop else {
            bindings.push(Binding { start, edge: None, end: None });
            continue;
        };
        let direction = match hop.rel.direction {
            HopDirection::Right => Direction::Out,
            HopDirection::Left => Direction::In,
            HopDirection::Either => Direction::Both,
        };
        let incident = graph
            .neighbors(start.id, hop.rel.polarity, direction)
            .expect("start node comes from this graph");
        for (edge, other) in incident {
            if hop.end.var == pattern.start.var && other.id != start.id {
                continue;
            }
            bindings.push(Binding {
                start,
                edge: Some(edge),
                end: Some(other),
            });
        }
    }
    let mut rows: Vec<Vec<String>> = bindings
        .iter()
        .filter(|b| ast.condition.as_ref().is_none_or(|c| eval(c, b, pattern)))
        .map(|b| ast.returns.iter().map(|item| project(item, b, pattern)).collect())
        .collect();
    rows.sort();
    if let Some(limit) = ast.limit {
        rows.truncate(usize::try_from(limit).unwrap_or(usize::MAX));
    }
    ResultTable {
        columns: ast.returns.iter().map(ReturnItem::column_name).collect(),
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{GraphBatch, NodeId};
    use crate::query::parse_query;
    use crate::rules::{Polarity, RuleType};
    use chrono::NaiveDate;

    fn graph() -> Graph {
        let node = |id: u64, name: &str, project: &str, rule: &str| ComponentNode {
            id: NodeId(id),
            name: name.into(),
            original_rule: rule.into(),
            rule_index: id,
            rule_type: RuleType::TextRule,
            project_name: project.into(),
            date: NaiveDate::from_ymd_opt(2024, 5, 16).unwrap(),
            owner: "huanghx11".into(),
            category: "VA".into(),
        };
        let edge = |s: u64, d: u64, p| CompatEdge {
            src: NodeId(s),
            dst: NodeId(d),
            polarity: p,
            provenance_rule_index: s,
        };
        Graph::build(GraphBatch {
            nodes: vec![
                node(0, "RTX3050 6GB G6 96b DVI++DP", "ThinkCentre M70T Gen5", "If select A310 GPU/RTX 3050 GPU, PSU can't be 180w."),
                node(1, "180W PSU", "ThinkCentre M70T Gen5", "PSU must select one"),
                node(2, "260W PSU", "ThinkCentre M70T Gen5", "PSU must select one"),
                node(3, "RTX3050 8GB", "Other", "x"),
            ],
            edges: vec![
                edge(0, 1, Polarity::ShouldNot),
                edge(0, 2, Polarity::Should),
                edge(2, 2, Polarity::Should),
            ],
            ..Default::default()
        })
        .unwrap()
    }

    fn run(q: &str) -> ResultTable {
        execute_query(&parse_query(q).unwrap(), &graph())
    }

    #[test]
    fn keyword_query_rows() {
        let t = run("MATCH (n:Component) WHERE n.name CONTAINS '3050' AND n.project_name CONTAINS 'm70t gen5' RETURN n.original_rule");
        assert_eq!(t.columns, ["n.original_rule"]);
        assert_eq!(t.rows, [["If select A310 GPU/RTX 3050 GPU, PSU can't be 180w."]]);
    }

    #[test]
    fn limit_and_sorting() {
        let t = run("MATCH (n) RETURN n.name");
        let names: Vec<&str> = t.rows.iter().map(|r| r[0].as_str()).collect();
        assert_eq!(names, ["180W PSU", "260W PSU", "RTX3050 6GB G6 96b DVI++DP", "RTX3050 8GB"]);
        assert_eq!(run("MATCH (n) RETURN n.name LIMIT 1").rows.len(), 1);
        assert!(run("MATCH (n) WHERE n.name = 'nothing' RETURN n").rows.is_empty());
    }

    #[test]
    fn hop_directions() {
        let out = run("MATCH (a)-[e:SHOULD_NOT]->(b) RETURN a.name, b.name, e.provenance_rule_index");
        assert_eq!(out.rows, [["RTX3050 6GB G6 96b DVI++DP", "180W PSU", "0"]]);
        let back = run("MATCH (a)<-[]-(b) WHERE a.name STARTS WITH '180' RETURN b.name");
        assert_eq!(back.rows, [["RTX3050 6GB G6 96b DVI++DP"]]);
        // The self-loop binds once; the 0-2 edge binds from both ends.
        let either = run("MATCH (a)-[:SHOULD]-(b) RETURN a.id, b.id");
        assert_eq!(either.rows, [["0", "2"], ["2", "0"], ["2", "2"]]);
        let loops = run("MATCH (a)-[e]->(a) RETURN a.id");
        assert_eq!(loops.rows, [["2"]]);
    }

    #[test]
    fn whole_variables_render_as_json() {
        let t = run("MATCH (a)-[e:SHOULD_NOT]->(b) RETURN e");
        let v: serde_json::Value = serde_json::from_str(&t.rows[0][0]).unwrap();
        assert_eq!(v["polarity"], "ShouldNot");
    }
}
