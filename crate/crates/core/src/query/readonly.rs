use super::QueryError;

pub const WRITE_KEYWORDS: [&str; 6] = ["CREATE", "DELETE", "SET", "MERGE", "REMOVE", "DROP"];

/// Rejects text containing a write clause keyword outside string literals.
pub fn assert_readonly(text: &str) -> Result<(), QueryError> {
    let mut chars = text.chars().peekable();
    let (mut line, mut column) = (1usize, 0usize);
    let mut word = String::new();
    let mut word_at = (1, 1);
    let mut quote: Option<char> = None;

    let check = |word: &str, at: (usize, usize)| -> Result<(), QueryError> {
        match WRITE_KEYWORDS.iter().find(|k| word.eq_ignore_ascii_case(k)) {
            Some(k) => Err(QueryError::WriteClause {
                keyword: k.to_string(),
                line: at.0,
                column: at.1,
            }),
            None => Ok(()),
        }
    };

    while let Some(c) = chars.next() {
        if c == '\n' {
            line += 1;
            column = 0;
        } else {
            column += 1;
        }
        if let Some(q) = quote {
            if c == '\\' {
                if chars.next().is_some() {
                    column += 1;
                }
            } else if c == q {
                quote = None;
            }
            continue;
        }
        if c.is_alphanumeric() || c == '_' {
            if word.is_empty() {
                word_at = (line, column);
            }
            word.push(c);
            continue;
        }
        check(&word, word_at)?;
        word.clear();
        if matches!(c, '\'' | '"' | '`') {
            quote = Some(c);
        }
    }
    check(&word, word_at)
}
