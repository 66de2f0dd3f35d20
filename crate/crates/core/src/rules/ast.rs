use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::normalize::normalize_rule_text;
use super::record::RawRuleRecord;

static CATALOG_CODE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^SBB[0-9A-Za-z]+$").unwrap());
static TRAILING_CODE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(?P<name>.*?)\s*\[(?P<code>SBB[0-9A-Za-z]+)\]$").unwrap());

/// A part reference, optionally carrying its catalog code.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ComponentRef {
    pub part_id: Option<String>,
    pub display_name: String,
}

impl ComponentRef {
    pub fn new(part_id: Option<&str>, display_name: &str) -> Result<Self, String> {
        let display_name = normalize_rule_text(display_name);
        if display_name.is_empty() {
            return Err("component name is empty".to_string());
        }
        if let Some(code) = part_id {
            if !is_catalog_code(code) {
                return Err(format!("{code:?} is not a catalog code"));
            }
        }
        Ok(Self {
            part_id: part_id.map(str::to_string),
            display_name,
        })
    }

    /// Parses `"SBB1K34458 1.5M Smart Cable"`, `"Screw kit[SBB1K30894]"` or a bare name.
    pub fn parse(text: &str) -> Result<Self, String> {
        let text = normalize_rule_text(text);
        if let Some(caps) = TRAILING_CODE.captures(&text) {
            let name = &caps["name"];
            let code = &caps["code"];
            return Self::new(Some(code), if name.is_empty() { code } else { name });
        }
        let mut parts = text.splitn(2, ' ');
        let first = parts.next().unwrap_or("");
        if is_catalog_code(first) {
            let rest = parts.next().unwrap_or("").trim();
            return Self::new(Some(first), if rest.is_empty() { first } else { rest });
        }
        Self::new(None, &text)
    }

    /// Whether a text fragment carries a catalog code in either position.
    pub fn has_catalog_code(text: &str) -> bool {
        let text = normalize_rule_text(text);
        TRAILING_CODE.is_match(&text) || text.split(' ').next().is_some_and(is_catalog_code)
    }
}

pub fn is_catalog_code(s: &str) -> bool {
    CATALOG_CODE.is_match(s)
}

impl fmt::Display for ComponentRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.part_id {
            Some(code) if *code != self.display_name => write!(f, "{code} {}", self.display_name),
            _ => f.write_str(&self.display_name),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Cardinality {
    ExactlyOne,
    ZeroOrOne,
}

impl Cardinality {
    pub fn bounds(self) -> (usize, usize) {
        match self {
            Cardinality::ExactlyOne => (1, 1),
            Cardinality::ZeroOrOne => (0, 1),
        }
    }

    pub fn from_bounds(min: usize, max: usize) -> Option<Self> {
        match (min, max) {
            (1, 1) => Some(Cardinality::ExactlyOne),
            (0, 1) => Some(Cardinality::ZeroOrOne),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Comparator {
    Is,
    IsNot,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AttributePredicate {
    pub attribute: String,
    pub value: String,
    pub comparator: Comparator,
}

impl AttributePredicate {
    pub fn new(attribute: &str, value: &str, comparator: Comparator) -> Result<Self, String> {
        let attribute = normalize_rule_text(attribute);
        let value = normalize_rule_text(value);
        if attribute.is_empty() || value.is_empty() {
            return Err("attribute predicate needs both an attribute and a value".to_string());
        }
        Ok(Self {
            attribute,
            value,
            comparator,
        })
    }
}

/// AND/OR tree; `All` binds tighter than `Any` when parsed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoolTree<T> {
    Leaf(T),
    All(Vec<BoolTree<T>>),
    Any(Vec<BoolTree<T>>),
}

impl<T> BoolTree<T> {
    pub fn leaves(&self) -> Vec<&T> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a T>) {
        match self {
            BoolTree::Leaf(t) => out.push(t),
            BoolTree::All(xs) | BoolTree::Any(xs) => xs.iter().for_each(|x| x.collect_leaves(out)),
        }
    }

    pub fn eval(&self, f: &impl Fn(&T) -> bool) -> bool {
        match self {
            BoolTree::Leaf(t) => f(t),
            BoolTree::All(xs) => xs.iter().all(|x| x.eval(f)),
            BoolTree::Any(xs) => xs.iter().any(|x| x.eval(f)),
        }
    }
}

impl<T: Clone> BoolTree<T> {
    /// Disjunctive normal form, or `None` when it would exceed `cap` terms.
    pub fn to_dnf(&self, cap: usize) -> Option<Vec<Vec<T>>> {
        match self {
            BoolTree::Leaf(t) => Some(vec![vec![t.clone()]]),
            BoolTree::Any(xs) => {
                let mut out = Vec::new();
                for x in xs {
                    out.extend(x.to_dnf(cap)?);
                    if out.len() > cap {
                        return None;
                    }
                }
                Some(out)
            }
            BoolTree::All(xs) => {
                let mut acc: Vec<Vec<T>> = vec![Vec::new()];
                for x in xs {
                    let terms = x.to_dnf(cap)?;
                    if acc.len() * terms.len() > cap {
                        return None;
                    }
                    acc = acc
                        .iter()
                        .flat_map(|a| {
                            terms.iter().map(move |t| {
                                let mut merged = a.clone();
                                merged.extend(t.iter().cloned());
                                merged
                            })
                        })
                        .collect();
                }
                Some(acc)
            }
        }
    }
}

pub type Condition = BoolTree<AttributePredicate>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Polarity {
    Should,
    ShouldNot,
}

impl Polarity {
    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Should => "Should",
            Polarity::ShouldNot => "ShouldNot",
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Polarity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let squashed: String = s
            .chars()
            .filter(|c| c.is_alphanumeric())
            .flat_map(char::to_lowercase)
            .collect();
        match squashed.as_str() {
            "should" => Ok(Polarity::Should),
            "shouldnot" => Ok(Polarity::ShouldNot),
            _ => Err(format!("unknown polarity {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Target {
    Component(ComponentRef),
    Attribute(AttributePredicate),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectRule {
    pub category: String,
    pub cardinality: Cardinality,
    pub members: Vec<ComponentRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeriveRule {
    pub consequent: ComponentRef,
    /// Disjunction of conjunctions.
    pub antecedents: Vec<Vec<ComponentRef>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextRule {
    pub condition: Condition,
    pub polarity: Polarity,
    pub targets: Vec<Target>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Rule {
    Select(SelectRule),
    Derive(DeriveRule),
    Text(TextRule),
}

/// A parsed rule together with the record it came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleAst {
    pub rule: Rule,
    pub source: RawRuleRecord,
}
