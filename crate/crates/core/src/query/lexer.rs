use super::QueryError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Str(String),
    Int(String),
    Sym(char),
    Eof,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

impl Token {
    pub fn describe(&self) -> String {
        match &self.tok {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Str(_) => "string literal".to_string(),
            Tok::Int(s) => format!("number {s}"),
            Tok::Sym(c) => format!("`{c}`"),
            Tok::Eof => "end of query".to_string(),
        }
    }

    pub fn is_keyword(&self, kw: &str) -> bool {
        matches!(&self.tok, Tok::Ident(s) if s.eq_ignore_ascii_case(kw))
    }
}

const SYMBOLS: &str = "()[]:,.-<>=|;";

/// Splits query text into tokens with 1-based line and column numbers.
pub fn tokenize(text: &str) -> Result<Vec<Token>, QueryError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut column) = (1usize, 1usize);

    macro_rules! bump {
        () => {{
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                column = 1;
            } else if c.is_some() {
                column += 1;
            }
            c
        }};
    }

    while let Some(&c) = chars.peek() {
        let (l, col) = (line, column);
        if c.is_whitespace() {
            bump!();
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    s.push(c);
                    bump!();
                } else {
                    break;
                }
            }
            out.push(Token { tok: Tok::Ident(s), line: l, column: col });
        } else if c.is_ascii_digit() {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_digit() {
                    s.push(c);
                    bump!();
                } else {
                    break;
                }
            }
            out.push(Token { tok: Tok::Int(s), line: l, column: col });
        } else if c == '\'' || c == '"' {
            let quote = c;
            bump!();
            let mut s = String::new();
            loop {
                match bump!() {
                    None => return Err(QueryError::syntax(l, col, "unterminated string literal")),
                    Some(ch) if ch == quote => break,
                    Some('\\') => {
                        let (el, ec) = (line, column);
                        let escaped = match bump!() {
                            Some('n') => '\n',
                            Some('t') => '\t',
                            Some('r') => '\r',
                            Some(e @ ('\\' | '\'' | '"')) => e,
                            Some(e) => return Err(QueryError::syntax(el, ec - 1, format!("unknown escape `\\{e}`"))),
                            None => return Err(QueryError::syntax(l, col, "unterminated string literal")),
                        };
                        s.push(escaped);
                    }
                    Some(ch) => s.push(ch),
                }
            }
            out.push(Token { tok: Tok::Str(s), line: l, column: col });
        } else if SYMBOLS.contains(c) {
            bump!();
            out.push(Token { tok: Tok::Sym(c), line: l, column: col });
        } else {
            return Err(QueryError::syntax(l, col, format!("unexpected character `{c}`")));
        }
    }
    out.push(Token { tok: Tok::Eof, line, column });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_and_escapes() {
        let toks = tokenize("MATCH (n)\n WHERE n.name = 'it\\'s'").unwrap();
        assert_eq!(toks[0], Token { tok: Tok::Ident("MATCH".into()), line: 1, column: 1 });
        let where_ = toks.iter().find(|t| t.is_keyword("where")).unwrap();
        assert_eq!((where_.line, where_.column), (2, 2));
        assert!(toks.iter().any(|t| t.tok == Tok::Str("it's".into())));
    }

    #[test]
    fn lexical_errors() {
        assert!(matches!(tokenize("MATCH 'abc"), Err(QueryError::Syntax { line: 1, column: 7, .. })));
        assert!(matches!(tokenize("MATCH (n) $"), Err(QueryError::Syntax { column: 11, .. })));
        assert!(matches!(tokenize("'\\q'"), Err(QueryError::Syntax { column: 2, .. })));
    }
}
