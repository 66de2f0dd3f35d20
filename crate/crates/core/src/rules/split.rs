//! Top-level splitting of compound rule expressions on `||` / `&&`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Connective joining an atom to the one after it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Connective {
    Or,
    And,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Atom {
    pub text: String,
    pub connective: Connective,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SplitError {
    #[error("unbalanced parenthesis at offset {offset}")]
    Unbalanced { offset: usize },
    #[error("empty operand at offset {offset}")]
    EmptyAtom { offset: usize },
}

/// Splits `text` on connectives at parenthesis depth zero.
///
/// Enclosing parenthesis pairs are removed from the whole expression and
/// from each atom. Juxtaposed groups such as `(A) (B)` are read as `(A) || (B)`,
/// the shape derive exports take once their `||` markers are cleaned out.
pub fn split_compound_rule(text: &str) -> Result<Vec<Atom>, SplitError> {
    let chars: Vec<char> = text.chars().collect();
    check_balance(&chars)?;
    let (lo, hi) = strip_enclosing(&chars, 0, chars.len());
    if lo == hi {
        return Ok(Vec::new());
    }

    let mut atoms = Vec::new();
    let mut depth = 0usize;
    let mut start = lo;
    let mut i = lo;
    while i < hi {
        match chars[i] {
            '(' | '[' => depth += 1,
            ')' | ']' => {
                depth = depth.saturating_sub(1);
                if depth == 0 && chars[i] == ')' {
                    let mut j = i + 1;
                    while j < hi && chars[j].is_whitespace() {
                        j += 1;
                    }
                    if j < hi && chars[j] == '(' {
                        push_atom(&mut atoms, &chars, start, i + 1, Connective::Or)?;
                        start = j;
                        i = j;
                        continue;
                    }
                }
            }
            '|' | '&' if depth == 0 && i + 1 < hi && chars[i + 1] == chars[i] => {
                let conn = if chars[i] == '|' { Connective::Or } else { Connective::And };
                push_atom(&mut atoms, &chars, start, i, conn)?;
                i += 2;
                start = i;
                continue;
            }
            _ => {}
        }
        i += 1;
    }
    push_atom(&mut atoms, &chars, start, hi, Connective::None)?;
    Ok(atoms)
}

/// Inverse of [`split_compound_rule`] up to whitespace: atoms that contain
/// their own connectives are parenthesised.
pub fn join_atoms(atoms: &[Atom]) -> String {
    let mut out = String::new();
    for atom in atoms {
        let nested = split_compound_rule(&atom.text).map(|a| a.len() > 1).unwrap_or(false);
        if nested {
            out.push('(');
            out.push_str(&atom.text);
            out.push(')');
        } else {
            out.push_str(&atom.text);
        }
        match atom.connective {
            Connective::Or => out.push_str(" || "),
            Connective::And => out.push_str(" && "),
            Connective::None => {}
        }
    }
    out
}

fn push_atom(
    atoms: &mut Vec<Atom>,
    chars: &[char],
    start: usize,
    end: usize,
    connective: Connective,
) -> Result<(), SplitError> {
    let (lo, hi) = strip_enclosing(chars, start, end);
    if lo == hi {
        return Err(SplitError::EmptyAtom { offset: start });
    }
    atoms.push(Atom {
        text: chars[lo..hi].iter().collect(),
        connective,
    });
    Ok(())
}

fn check_balance(chars: &[char]) -> Result<(), SplitError> {
    let mut open = Vec::new();
    for (i, &c) in chars.iter().enumerate() {
        match c {
            '(' => open.push(i),
            ')' if open.pop().is_none() => return Err(SplitError::Unbalanced { offset: i }),
            _ => {}
        }
    }
    match open.first() {
        Some(&offset) => Err(SplitError::Unbalanced { offset }),
        None => Ok(()),
    }
}

/// Trims whitespace and redundant outer `( ... )` pairs from `chars[start..end]`.
fn strip_enclosing(chars: &[char], start: usize, end: usize) -> (usize, usize) {
    let (mut lo, mut hi) = trim(chars, start, end);
    while hi - lo >= 2 && chars[lo] == '(' && chars[hi - 1] == ')' && matching_close(chars, lo) == Some(hi - 1) {
        (lo, hi) = trim(chars, lo + 1, hi - 1);
    }
    (lo, hi)
}

fn trim(chars: &[char], mut lo: usize, mut hi: usize) -> (usize, usize) {
    while lo < hi && chars[lo].is_whitespace() {
        lo += 1;
    }
    while hi > lo && chars[hi - 1].is_whitespace() {
        hi -= 1;
    }
    (lo, hi)
}

fn matching_close(chars: &[char], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    for (i, &c) in chars.iter().enumerate().skip(open) {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn texts(atoms: &[Atom]) -> Vec<&str> {
        atoms.iter().map(|a| a.text.as_str()).collect()
    }

    #[test]
    fn cpu_disjunction() {
        let text = crate::rules::normalize::normalize_rule_text(
            "(✓ Intel i5-12400 2.5GHz/6C/12T/18M 65W DDR5 4800 || ✓ Intel i5-12400F 2.5GHz/6C/12T/18M 65W DDR5 4800 || ✓ Intel i5-12500 3.0GHz/6C/12T/18M 65W DDR5 4800)",
        );
        let atoms = split_compound_rule(&text).unwrap();
        assert_eq!(
            texts(&atoms),
            [
                "Intel i5-12400 2.5GHz/6C/12T/18M 65W DDR5 4800",
                "Intel i5-12400F 2.5GHz/6C/12T/18M 65W DDR5 4800",
                "Intel i5-12500 3.0GHz/6C/12T/18M 65W DDR5 4800",
            ]
        );
        let conns: Vec<_> = atoms.iter().map(|a| a.connective).collect();
        assert_eq!(conns, [Connective::Or, Connective::Or, Connective::None]);
    }

    #[test]
    fn single_atom() {
        let atoms = split_compound_rule("single atom").unwrap();
        assert_eq!(
            atoms,
            [Atom { text: "single atom".into(), connective: Connective::None }]
        );
    }

    #[test]
    fn nested_group_stays_whole() {
        let atoms = split_compound_rule("(A && B) || C").unwrap();
        assert_eq!(texts(&atoms), ["A && B", "C"]);
        assert_eq!(atoms[0].connective, Connective::Or);
    }

    #[test]
    fn juxtaposed_groups_are_alternatives() {
        let atoms = split_compound_rule("( SBB1 Base,180w) ( SBB2 Base,260w)").unwrap();
        assert_eq!(texts(&atoms), ["SBB1 Base,180w", "SBB2 Base,260w"]);
        assert_eq!(atoms[0].connective, Connective::Or);
    }

    #[test]
    fn unbalanced_reports_offset() {
        assert_eq!(
            split_compound_rule("(A || B"),
            Err(SplitError::Unbalanced { offset: 0 })
        );
        assert_eq!(
            split_compound_rule("A) || B"),
            Err(SplitError::Unbalanced { offset: 1 })
        );
    }

    #[test]
    fn empty_operand() {
        assert!(matches!(split_compound_rule("A || || B"), Err(SplitError::EmptyAtom { .. })));
        assert_eq!(split_compound_rule("  ").unwrap(), vec![]);
    }

    /// Independent splitter: tokenises into words and connective tokens,
    /// tracking depth with a counter, and never looks at enclosing pairs
    /// except by depth.
    fn oracle_split(text: &str) -> Vec<String> {
        let mut parts = Vec::new();
        let mut cur = String::new();
        let mut depth: i32 = 0;
        let bytes: Vec<char> = text.chars().collect();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i];
            if c == '(' { depth += 1; }
            if c == ')' { depth -= 1; }
            if depth == 0 && i + 1 < bytes.len() && (c == '|' || c == '&') && bytes[i + 1] == c {
                parts.push(std::mem::take(&mut cur));
                i += 2;
                continue;
            }
            cur.push(c);
            i += 1;
        }
        parts.push(cur);
        parts
            .into_iter()
            .map(|p| {
                let t = p.trim();
                if t.starts_with('(') && t.ends_with(')') { t[1..t.len() - 1].trim().to_string() } else { t.to_string() }
            })
            .collect()
    }

    #[test]
    fn matches_depth_oracle() {
        for case in ["(A && B) || C", "A || (B || C) && D", "X && (Y)", "(P && Q) || (R && S) || T"] {
            let got: Vec<String> = split_compound_rule(case).unwrap().into_iter().map(|a| a.text).collect();
            assert_eq!(got, oracle_split(case), "{case}");
        }
    }

    fn expr() -> impl Strategy<Value = String> {
        let leaf = "[a-z][a-z0-9 ]{0,6}[a-z0-9]".prop_map(|s| s);
        leaf.prop_recursive(3, 12, 4, |inner| {
            (prop::collection::vec(inner, 1..4), prop::bool::ANY, prop::bool::ANY).prop_map(|(xs, or, paren)| {
                let sep = if or { " || " } else { " && " };
                let joined = xs.join(sep);
                if paren { format!("({joined})") } else { joined }
            })
        })
    }

    proptest! {
        #[test]
        fn rejoin_resplit_round_trip(e in expr()) {
            let atoms = split_compound_rule(&e).unwrap();
            let again = split_compound_rule(&join_atoms(&atoms)).unwrap();
            prop_assert_eq!(again, atoms);
        }
    }
}
