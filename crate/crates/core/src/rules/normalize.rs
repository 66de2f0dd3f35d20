/// Check-mark glyphs used as list bullets in derive bodies.
const CHECK_MARKS: [char; 2] = ['\u{2713}', '\u{2714}'];

/// Canonical form of a rule fragment or part name.
///
/// Drops check marks, collapses whitespace, and removes the trailing `.` and
/// stray one-letter suffix (`"... DVI++DP I"`) that distinguish export
/// variants of the same part. Connectives, parentheses and bracketed catalog
/// codes pass through untouched. Idempotent.
pub fn normalize_rule_text(text: &str) -> String {
    let mut tokens: Vec<&str> = text
        .split(|c: char| c.is_whitespace() || CHECK_MARKS.contains(&c))
        .filter(|t| !t.is_empty())
        .collect();

    loop {
        let before = tokens.len();
        let mut last_changed = false;
        if let Some(last) = tokens.last_mut() {
            let trimmed = last.trim_end_matches('.');
            if trimmed.len() != last.len() {
                *last = trimmed;
                last_changed = true;
            }
        }
        if tokens.last().is_some_and(|t| t.is_empty()) {
            tokens.pop();
        }
        if is_stray_suffix(&tokens) {
            tokens.pop();
        }
        if tokens.len() == before && !last_changed {
            break;
        }
    }
    tokens.join(" ")
}

/// A lone letter after a token that looks like a part designation (contains
/// a digit or symbol). Ordinary words such as `"be Y"` are left alone.
fn is_stray_suffix(tokens: &[&str]) -> bool {
    let [.., prev, last] = tokens else {
        return false;
    };
    let mut chars = last.chars();
    let single_letter = matches!((chars.next(), chars.next()), (Some(c), None) if c.is_alphabetic());
    // The previous token must look like a part code, not a connective.
    single_letter && prev.chars().any(|c| !c.is_alphabetic()) && prev.chars().any(char::is_alphanumeric)
}
