//! Parsers for the three rule grammars.
//!
//! ```text
//! Select:  Group -- One from [<member>, <member>, ...]
//!          Group -- 0-1 from [<member>]
//! Derive:  summary "<consequent> is must select one"
//!          body    (✓ <part>) (✓ <part> && ✓ <part>) || (✓ <part>)
//! Text:    If <attr> is <value> [AND|OR <attr> is [not] <value>]...,
//!          THEN <attr> should [NOT] be <value> [OR <value>]...
//! ```

use std::sync::LazyLock;

use regex::Regex;

use super::ast::*;
use super::normalize::normalize_rule_text;
use super::record::{QuarantineStage, QuarantinedRule, RawRuleRecord, RuleType};
use super::split::{split_compound_rule, Connective};

/// Upper bound on DNF terms produced from one derive body.
const MAX_DNF_TERMS: usize = 256;

static SELECT_BODY: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^group\s*--\s*(?P<card>.+?)\s+from\s*\[(?P<members>.*)\]$").unwrap()
});
static CARD_RANGE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(\d+)\s*-\s*(\d+)$").unwrap());
static DERIVE_SUMMARY: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^(?P<name>.+?)\s+is\s+must\s+select\s+one\b").unwrap());
static TEXT_BODY: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^if\s+(?P<cond>.+?)[\s,]+then\s+(?P<cons>.+)$").unwrap());
static PREDICATE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^(?P<attr>.+?)\s+is\s+(?P<not>not\s+)?(?P<value>.+)$").unwrap()
});
static CONSEQUENCE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)^(?P<attr>.*?)\s*\b(?P<pol>should\s+not|shouldn't|can't|can\s*not|should)\s+(?:be\s+|select\s+)?(?P<targets>.+)$",
    )
    .unwrap()
});
static WORD_AND: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\s+AND\s+").unwrap());
static WORD_OR: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\s+OR\s+").unwrap());

/// Why a record could not be parsed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseFailure {
    pub stage: QuarantineStage,
    pub reason: String,
}

impl ParseFailure {
    fn parse(reason: impl Into<String>) -> Self {
        Self {
            stage: QuarantineStage::Parse,
            reason: reason.into(),
        }
    }

    fn split(err: super::split::SplitError) -> Self {
        Self {
            stage: QuarantineStage::Split,
            reason: err.to_string(),
        }
    }
}

type Parsed<T> = Result<T, ParseFailure>;

fn normalized_body(record: &RawRuleRecord) -> Parsed<String> {
    let body = normalize_rule_text(&record.rule_body);
    if body.is_empty() {
        return Err(ParseFailure {
            stage: QuarantineStage::Normalize,
            reason: "rule body is empty after normalization".to_string(),
        });
    }
    Ok(body)
}

fn expect_type(record: &RawRuleRecord, want: RuleType) -> Parsed<()> {
    if record.rule_type == want {
        Ok(())
    } else {
        Err(ParseFailure::parse(format!(
            "expected a {want} rule, record is {}",
            record.rule_type
        )))
    }
}

pub fn parse_select_rule(record: &RawRuleRecord) -> Parsed<RuleAst> {
    expect_type(record, RuleType::Select)?;
    let body = normalized_body(record)?;
    let caps = SELECT_BODY
        .captures(&body)
        .ok_or_else(|| ParseFailure::parse("select body must look like `Group -- <n> from [...]`"))?;
    let cardinality = parse_cardinality(&caps["card"])?;
    let members = split_members(&caps["members"])
        .into_iter()
        .map(|m| ComponentRef::parse(&m))
        .collect::<Result<Vec<_>, _>>()
        .map_err(ParseFailure::parse)?;
    if members.is_empty() {
        return Err(ParseFailure::parse("select group has no members"));
    }
    Ok(RuleAst {
        rule: Rule::Select(SelectRule {
            category: record.category.clone(),
            cardinality,
            members,
        }),
        source: record.clone(),
    })
}

fn parse_cardinality(phrase: &str) -> Parsed<Cardinality> {
    let phrase = phrase.trim();
    if phrase.eq_ignore_ascii_case("one") {
        return Ok(Cardinality::ExactlyOne);
    }
    if let Some(caps) = CARD_RANGE.captures(phrase) {
        let min: usize = caps[1].parse().map_err(|_| ParseFailure::parse("cardinality out of range"))?;
        let max: usize = caps[2].parse().map_err(|_| ParseFailure::parse("cardinality out of range"))?;
        if min > max {
            return Err(ParseFailure::parse(format!("cardinality {min}-{max} has min above max")));
        }
        return Cardinality::from_bounds(min, max).ok_or_else(|| {
            ParseFailure::parse(format!("unsupported cardinality {min}-{max}"))
        });
    }
    Err(ParseFailure::parse(format!("unknown cardinality phrase {phrase:?}")))
}

/// Splits a bracket list on commas followed by whitespace at depth zero.
/// A comma glued to the next word (`Base,260w`) belongs to the part name.
fn split_members(list: &str) -> Vec<String> {
    let chars: Vec<char> = list.chars().collect();
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for (i, &c) in chars.iter().enumerate() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            ',' if depth == 0 && chars.get(i + 1).is_none_or(|n| n.is_whitespace()) => {
                out.push(std::mem::take(&mut cur));
                continue;
            }
            _ => {}
        }
        cur.push(c);
    }
    out.push(cur);
    out.into_iter()
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

pub fn parse_derive_rule(record: &RawRuleRecord) -> Parsed<RuleAst> {
    expect_type(record, RuleType::Derive)?;
    let summary = normalize_rule_text(&record.summary);
    let consequent = DERIVE_SUMMARY
        .captures(&summary)
        .map(|c| c["name"].to_string())
        .ok_or_else(|| ParseFailure::parse("summary does not name a consequent (`X is must select one`)"))?;
    let consequent = ComponentRef::parse(&consequent).map_err(ParseFailure::parse)?;

    let body = normalized_body(record)?;
    let tree = bool_tree(&body, &|atom: &str| ComponentRef::parse(atom))?;
    let antecedents = tree
        .to_dnf(MAX_DNF_TERMS)
        .ok_or_else(|| ParseFailure::parse(format!("antecedent expansion exceeds {MAX_DNF_TERMS} terms")))?;
    if antecedents.is_empty() || antecedents.iter().any(Vec::is_empty) {
        return Err(ParseFailure::parse("derive rule has no antecedents"));
    }
    Ok(RuleAst {
        rule: Rule::Derive(DeriveRule {
            consequent,
            antecedents,
        }),
        source: record.clone(),
    })
}

pub fn parse_text_rule(record: &RawRuleRecord) -> Parsed<RuleAst> {
    expect_type(record, RuleType::TextRule)?;
    let body = normalized_body(record)?;
    if !body.to_ascii_lowercase().starts_with("if ") {
        return Err(ParseFailure::parse("text rule must start with IF"));
    }
    let caps = TEXT_BODY
        .captures(&body)
        .ok_or_else(|| ParseFailure::parse("text rule has no THEN clause"))?;
    let condition = bool_tree(&word_connectives(&caps["cond"]), &parse_predicate)?;

    let cons = caps["cons"].trim();
    let cons_caps = CONSEQUENCE
        .captures(cons)
        .ok_or_else(|| ParseFailure::parse("cannot determine polarity of THEN clause"))?;
    let pol = cons_caps["pol"].to_ascii_lowercase();
    let polarity = if pol == "should" {
        Polarity::Should
    } else {
        Polarity::ShouldNot
    };
    let attribute = cons_caps["attr"].trim().trim_end_matches(',').trim();
    let targets = parse_targets(attribute, &cons_caps["targets"])?;
    if targets.is_empty() {
        return Err(ParseFailure::parse("THEN clause names no targets"));
    }
    Ok(RuleAst {
        rule: Rule::Text(TextRule {
            condition,
            polarity,
            targets,
        }),
        source: record.clone(),
    })
}

/// Upper-case `AND` / `OR` words become `&&` / `||`; lower-case `and`
/// stays inside names like "Screw and Grommet".
fn word_connectives(text: &str) -> String {
    let text = WORD_AND.replace_all(text, " && ");
    WORD_OR.replace_all(&text, " || ").into_owned()
}

fn parse_predicate(atom: &str) -> Result<AttributePredicate, String> {
    let atom = atom.trim().trim_matches(',').trim();
    let caps = PREDICATE
        .captures(atom)
        .ok_or_else(|| format!("condition {atom:?} is not an `<attribute> is <value>` predicate"))?;
    let comparator = if caps.name("not").is_some() {
        Comparator::IsNot
    } else {
        Comparator::Is
    };
    AttributePredicate::new(&caps["attr"], caps["value"].trim_end_matches(','), comparator)
}

fn parse_targets(attribute: &str, text: &str) -> Parsed<Vec<Target>> {
    let atoms = split_compound_rule(&word_connectives(text)).map_err(ParseFailure::split)?;
    let mut targets = Vec::new();
    for atom in atoms {
        for piece in split_members(&atom.text) {
            let piece = piece.trim_matches(',').trim();
            if piece.is_empty() {
                continue;
            }
            let target = if attribute.is_empty() || ComponentRef::has_catalog_code(piece) {
                Target::Component(ComponentRef::parse(piece).map_err(ParseFailure::parse)?)
            } else {
                Target::Attribute(
                    AttributePredicate::new(attribute, piece, Comparator::Is).map_err(ParseFailure::parse)?,
                )
            };
            targets.push(target);
        }
    }
    Ok(targets)
}

/// Builds an AND/OR tree from a connective expression (`&&` binds tighter).
fn bool_tree<T>(text: &str, leaf: &impl Fn(&str) -> Result<T, String>) -> Parsed<BoolTree<T>> {
    let atoms = split_compound_rule(text).map_err(ParseFailure::split)?;
    match atoms.len() {
        0 => Err(ParseFailure::parse("empty expression")),
        1 => leaf(&atoms[0].text).map(BoolTree::Leaf).map_err(ParseFailure::parse),
        _ => {
            let mut any = Vec::new();
            let mut all = Vec::new();
            for atom in &atoms {
                all.push(bool_tree(&atom.text, leaf)?);
                if atom.connective != Connective::And {
                    let group = std::mem::take(&mut all);
                    any.push(collapse(group, BoolTree::All));
                }
            }
            Ok(collapse(any, BoolTree::Any))
        }
    }
}

fn collapse<T>(mut xs: Vec<BoolTree<T>>, wrap: fn(Vec<BoolTree<T>>) -> BoolTree<T>) -> BoolTree<T> {
    if xs.len() == 1 {
        xs.pop().unwrap()
    } else {
        wrap(xs)
    }
}

/// Dispatches on the record's rule type.
pub fn parse_record(record: &RawRuleRecord) -> Parsed<RuleAst> {
    match record.rule_type {
        RuleType::Select => parse_select_rule(record),
        RuleType::Derive => parse_derive_rule(record),
        RuleType::TextRule => parse_text_rule(record),
    }
}

/// Parses every record; each lands in exactly one of the two outputs.
pub fn parse_records(records: &[RawRuleRecord]) -> (Vec<RuleAst>, Vec<QuarantinedRule>) {
    let mut asts = Vec::with_capacity(records.len());
    let mut rejected = Vec::new();
    for record in records {
        match parse_record(record) {
            Ok(ast) => asts.push(ast),
            Err(f) => rejected.push(QuarantinedRule::from_record(record.clone(), f.stage, f.reason)),
        }
    }
    (asts, rejected)
}
