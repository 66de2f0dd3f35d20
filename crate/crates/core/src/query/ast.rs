use std::fmt;

use crate::graph::NodeAttribute;
use crate::rules::Polarity;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodePattern {
    pub var: String,
    /// Whether `:Component` was written. It is the only label, so it does
    /// not change matching.
    pub labelled: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HopDirection {
    /// `-[]->`
    Right,
    /// `<-[]-`
    Left,
    /// `-[]-`
    Either,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelPattern {
    pub var: Option<String>,
    pub polarity: Option<Polarity>,
    pub direction: HopDirection,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hop {
    pub rel: RelPattern,
    pub end: NodePattern,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchPattern {
    pub start: NodePattern,
    pub hop: Option<Hop>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeProperty {
    Src,
    Dst,
    Polarity,
    ProvenanceRuleIndex,
}

impl EdgeProperty {
    pub const ALL: [EdgeProperty; 4] = [
        EdgeProperty::Src,
        EdgeProperty::Dst,
        EdgeProperty::Polarity,
        EdgeProperty::ProvenanceRuleIndex,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeProperty::Src => "src",
            EdgeProperty::Dst => "dst",
            EdgeProperty::Polarity => "polarity",
            EdgeProperty::ProvenanceRuleIndex => "provenance_rule_index",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Property {
    Node(NodeAttribute),
    Edge(EdgeProperty),
}

impl Property {
    pub fn as_str(self) -> &'static str {
        match self {
            Property::Node(a) => a.as_str(),
            Property::Edge(p) => p.as_str(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropRef {
    pub var: String,
    pub property: Property,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareOp {
    Contains,
    Equals,
    StartsWith,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Comparison {
    pub left: PropRef,
    pub op: CompareOp,
    pub literal: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Cond {
    Compare(Comparison),
    And(Box<Cond>, Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
    Not(Box<Cond>),
}

impl Cond {
    pub fn and(a: Cond, b: Cond) -> Cond {
        Cond::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Cond, b: Cond) -> Cond {
        Cond::Or(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Cond) -> Cond {
        Cond::Not(Box::new(a))
    }

    /// Operands of the outermost AND chain.
    pub fn conjuncts(&self) -> Vec<&Cond> {
        match self {
            Cond::And(a, b) => {
                let mut out = a.conjuncts();
                out.extend(b.conjuncts());
                out
            }
            other => vec![other],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReturnItem {
    Property(PropRef),
    Variable(String),
}

impl ReturnItem {
    pub fn column_name(&self) -> String {
        self.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryAst {
    pub pattern: MatchPattern,
    pub condition: Option<Cond>,
    pub returns: Vec<ReturnItem>,
    pub limit: Option<u64>,
}

/// Single-quoted literal with backslash escapes.
pub fn quote_literal(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for c in s.chars() {
        match c {
            '\'' => out.push_str("\\'"),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

impl fmt::Display for NodePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.labelled {
            write!(f, "({}:Component)", self.var)
        } else {
            write!(f, "({})", self.var)
        }
    }
}

impl fmt::Display for RelPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut inner = self.var.clone().unwrap_or_default();
        match self.polarity {
            Some(Polarity::Should) => inner.push_str(":SHOULD"),
            Some(Polarity::ShouldNot) => inner.push_str(":SHOULD_NOT"),
            None => {}
        }
        match self.direction {
            HopDirection::Right => write!(f, "-[{inner}]->"),
            HopDirection::Left => write!(f, "<-[{inner}]-"),
            HopDirection::Either => write!(f, "-[{inner}]-"),
        }
    }
}

impl fmt::Display for MatchPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.start)?;
        if let Some(hop) = &self.hop {
            write!(f, "{}{}", hop.rel, hop.end)?;
        }
        Ok(())
    }
}

impl fmt::Display for PropRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.var, self.property.as_str())
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.op {
            CompareOp::Contains => "CONTAINS",
            CompareOp::Equals => "=",
            CompareOp::StartsWith => "STARTS WITH",
        };
        write!(f, "{} {op} {}", self.left, quote_literal(&self.literal))
    }
}

fn fmt_operand(c: &Cond, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match c {
        Cond::And(..) | Cond::Or(..) => write!(f, "({c})"),
        _ => write!(f, "{c}"),
    }
}

impl fmt::Display for Cond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cond::Compare(c) => write!(f, "{c}"),
            Cond::And(a, b) | Cond::Or(a, b) => {
                // AND chains lean left when parsed, so a left AND operand needs no parens.
                let word = if matches!(self, Cond::And(..)) { "AND" } else { "OR" };
                let same = |x: &Cond| matches!((self, x), (Cond::And(..), Cond::And(..)) | (Cond::Or(..), Cond::Or(..)));
                if same(a) {
                    write!(f, "{a}")?;
                } else {
                    fmt_operand(a, f)?;
                }
                write!(f, " {word} ")?;
                fmt_operand(b, f)
            }
            Cond::Not(a) => {
                f.write_str("NOT ")?;
                fmt_operand(a, f)
            }
        }
    }
}

impl fmt::Display for ReturnItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReturnItem::Property(p) => write!(f, "{p}"),
            ReturnItem::Variable(v) => f.write_str(v),
        }
    }
}

impl fmt::Display for QueryAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MATCH {}", self.pattern)?;
        if let Some(c) = &self.condition {
            write!(f, " WHERE {c}")?;
        }
        f.write_str(" RETURN ")?;
        for (i, item) in self.returns.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{item}")?;
        }
        if let Some(n) = self.limit {
            write!(f, " LIMIT {n}")?;
        }
        Ok(())
    }
}
