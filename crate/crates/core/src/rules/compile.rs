//! Lowering of parsed rules to graph nodes, edges, groups and derivations.

use std::collections::{HashMap, HashSet};

use super::ast::{AttributePredicate, Comparator, ComponentRef, Rule, RuleAst, Target};
use super::normalize::normalize_rule_text;
use super::Polarity;
use crate::graph::{CompatEdge, ComponentNode, Derivation, GraphBatch, NodeId, RuleText, SelectGroup};
use super::record::RawRuleRecord;

/// Name of the pseudo-component standing for an attribute predicate.
pub fn pseudo_node_name(predicate: &AttributePredicate) -> String {
    let op = match predicate.comparator {
        Comparator::Is => "=",
        Comparator::IsNot => "!=",
    };
    normalize_rule_text(&format!("{}{op}{}", predicate.attribute, predicate.value))
}

/// Node name for a condition leaf. Predicates whose value is a catalogued part
/// name that part directly.
fn leaf_name(predicate: &AttributePredicate) -> String {
    if predicate.comparator == Comparator::Is && ComponentRef::has_catalog_code(&predicate.value) {
        if let Ok(part) = ComponentRef::parse(&predicate.value) {
            return part.display_name;
        }
    }
    pseudo_node_name(predicate)
}

fn target_name(target: &Target) -> String {
    match target {
        Target::Component(c) => c.display_name.clone(),
        Target::Attribute(p) => pseudo_node_name(p),
    }
}

#[derive(Default)]
struct Compiler {
    batch: GraphBatch,
    ids: HashMap<(String, String), NodeId>,
    edge_keys: HashSet<(NodeId, NodeId, Polarity)>,
}

impl Compiler {
    fn node(&mut self, name: &str, source: &RawRuleRecord) -> NodeId {
        let name = normalize_rule_text(name);
        let key = (name, source.project_name.clone());
        if let Some(id) = self.ids.get(&key) {
            return *id;
        }
        let id = NodeId(self.batch.nodes.len() as u64);
        self.batch.nodes.push(ComponentNode {
            id,
            name: key.0.clone(),
            original_rule: source.summary.clone(),
            rule_index: source.rule_index,
            rule_type: source.rule_type,
            project_name: source.project_name.clone(),
            date: source.date,
            owner: source.owner.clone(),
            category: source.category.clone(),
        });
        self.ids.insert(key, id);
        id
    }

    fn edge(&mut self, src: NodeId, dst: NodeId, polarity: Polarity, rule_index: u64) {
        if self.edge_keys.insert((src, dst, polarity)) {
            self.batch.edges.push(CompatEdge {
                src,
                dst,
                polarity,
                provenance_rule_index: rule_index,
            });
        }
    }

    fn rule(&mut self, ast: &RuleAst) {
        let src = &ast.source;
        self.batch.rules.push(RuleText {
            project_name: src.project_name.clone(),
            rule_index: src.rule_index,
            text: src.summary.clone(),
        });
        match &ast.rule {
            Rule::Select(s) => {
                let member_ids = s.members.iter().map(|m| self.node(&m.display_name, src)).collect();
                self.batch.groups.push(SelectGroup {
                    category: s.category.clone(),
                    cardinality: s.cardinality,
                    member_ids,
                    rule_index: src.rule_index,
                    project_name: src.project_name.clone(),
                });
            }
            Rule::Derive(d) => {
                let antecedents: Vec<Vec<NodeId>> = d
                    .antecedents
                    .iter()
                    .map(|conj| conj.iter().map(|c| self.node(&c.display_name, src)).collect())
                    .collect();
                let consequent = self.node(&d.consequent.display_name, src);
                for id in antecedents.iter().flatten() {
                    self.edge(*id, consequent, Polarity::Should, src.rule_index);
                }
                self.batch.derivations.push(Derivation {
                    consequent,
                    antecedents,
                    rule_index: src.rule_index,
                    project_name: src.project_name.clone(),
                });
            }
            Rule::Text(t) => {
                let leaves: Vec<NodeId> = t
                    .condition
                    .leaves()
                    .into_iter()
                    .map(|p| self.node(&leaf_name(p), src))
                    .collect();
                let targets: Vec<NodeId> = t.targets.iter().map(|x| self.node(&target_name(x), src)).collect();
                for &a in &leaves {
                    for &b in &targets {
                        self.edge(a, b, t.polarity, src.rule_index);
                    }
                }
            }
        }
    }
}

/// Compiles rules in order. Node ids are assigned in first-seen order and a
/// node keeps the attributes of the first rule that mentions it.
pub fn compile_rules(asts: &[RuleAst]) -> GraphBatch {
    let mut compiler = Compiler::default();
    for ast in asts {
        compiler.rule(ast);
    }
    compiler.batch
}
