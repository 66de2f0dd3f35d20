//! Recursive-descent parser for the query subset.
//!
//! ```text
//! query   := MATCH node [rel node] [WHERE cond] RETURN item {, item} [LIMIT int] [;]
//! node    := ( var [:Component] )
//! rel     := -[ [var] [:SHOULD | :SHOULD_NOT] ]->  |  <-[ ... ]-  |  -[ ... ]-
//! cond    := disj ;  disj := conj {OR conj} ;  conj := neg {AND neg}
//! neg     := NOT neg | ( cond ) | var.prop (CONTAINS | = | STARTS WITH) literal
//! item    := var | var.prop
//! ```
//! Keywords are case-insensitive.

use std::collections::HashMap;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::QueryError;
use crate::graph::NodeAttribute;
use crate::rules::Polarity;

const RESERVED: [&str; 11] = [
    "MATCH", "WHERE", "RETURN", "LIMIT", "AND", "OR", "NOT", "CONTAINS", "STARTS", "WITH", "COMPONENT",
];

#[derive(Clone, Copy, PartialEq, Eq)]
enum VarKind {
    Node,
    Edge,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    vars: HashMap<String, VarKind>,
}

pub fn parse_query(text: &str) -> Result<QueryAst, QueryError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
        vars: HashMap::new(),
    };
    p.query()
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_at(t: &Token, message: impl Into<String>) -> QueryError {
        QueryError::syntax(t.line, t.column, message)
    }

    fn unexpected(&self, wanted: &str) -> QueryError {
        let t = self.peek();
        Self::error_at(t, format!("expected {wanted}, found {}", t.describe()))
    }

    fn keyword(&mut self, kw: &str) -> Result<(), QueryError> {
        if self.peek().is_keyword(kw) {
            self.next();
            Ok(())
        } else {
            Err(self.unexpected(kw))
        }
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        let hit = self.peek().is_keyword(kw);
        if hit {
            self.next();
        }
        hit
    }

    fn sym(&mut self, c: char) -> Result<(), QueryError> {
        if self.peek().tok == Tok::Sym(c) {
            self.next();
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{c}`")))
        }
    }

    fn eat_sym(&mut self, c: char) -> bool {
        let hit = self.peek().tok == Tok::Sym(c);
        if hit {
            self.next();
        }
        hit
    }

    fn variable(&mut self) -> Result<(String, Token), QueryError> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Ident(s) if !RESERVED.iter().any(|k| s.eq_ignore_ascii_case(k)) => {
                self.next();
                Ok((s.clone(), t))
            }
            _ => Err(self.unexpected("a variable name")),
        }
    }

    fn bind(&mut self, name: &str, kind: VarKind, at: &Token) -> Result<(), QueryError> {
        match self.vars.insert(name.to_string(), kind) {
            Some(prev) if prev != kind => Err(Self::error_at(
                at,
                format!("variable `{name}` is bound to both a node and a relationship"),
            )),
            Some(_) if kind == VarKind::Edge => Err(Self::error_at(at, format!("variable `{name}` is bound twice"))),
            _ => Ok(()),
        }
    }

    fn query(&mut self) -> Result<QueryAst, QueryError> {
        self.keyword("MATCH")?;
        let pattern = self.pattern()?;
        let condition = if self.eat_keyword("WHERE") {
            Some(self.disjunction()?)
        } else {
            None
        };
        self.keyword("RETURN")?;
        let mut returns = vec![self.return_item()?];
        while self.eat_sym(',') {
            returns.push(self.return_item()?);
        }
        let limit = if self.eat_keyword("LIMIT") {
            let t = self.next();
            match &t.tok {
                Tok::Int(s) => match s.parse::<u64>() {
                    Ok(0) => return Err(Self::error_at(&t, "LIMIT must be at least 1")),
                    Ok(n) => Some(n),
                    Err(_) => return Err(Self::error_at(&t, "LIMIT is out of range")),
                },
                _ => return Err(Self::error_at(&t, format!("expected a LIMIT count, found {}", t.describe()))),
            }
        } else {
            None
        };
        self.eat_sym(';');
        if self.peek().tok != Tok::Eof {
            return Err(self.unexpected("end of query"));
        }
        Ok(QueryAst {
            pattern,
            condition,
            returns,
            limit,
        })
    }

    fn node_pattern(&mut self) -> Result<NodePattern, QueryError> {
        self.sym('(')?;
        let (var, at) = self.variable()?;
        self.bind(&var, VarKind::Node, &at)?;
        let labelled = if self.eat_sym(':') {
            let t = self.next();
            if !t.is_keyword("Component") {
                return Err(Self::error_at(&t, format!("unknown node label {}", t.describe())));
            }
            true
        } else {
            false
        };
        self.sym(')')?;
        Ok(NodePattern { var, labelled })
    }

    fn pattern(&mut self) -> Result<MatchPattern, QueryError> {
        let start = self.node_pattern()?;
        let left = if self.eat_sym('<') {
            self.sym('-')?;
            true
        } else if self.eat_sym('-') {
            false
        } else {
            return Ok(MatchPattern { start, hop: None });
        };
        let mut var = None;
        let mut polarity = None;
        if self.eat_sym('[') {
            if matches!(self.peek().tok, Tok::Ident(_)) {
                let (name, at) = self.variable()?;
                self.bind(&name, VarKind::Edge, &at)?;
                var = Some(name);
            }
            if self.eat_sym(':') {
                let t = self.next();
                polarity = Some(if t.is_keyword("SHOULD") {
                    Polarity::Should
                } else if t.is_keyword("SHOULD_NOT") {
                    Polarity::ShouldNot
                } else {
                    return Err(Self::error_at(&t, format!("unknown relationship type {}", t.describe())));
                });
            }
            self.sym(']')?;
        }
        self.sym('-')?;
        let right = self.eat_sym('>');
        let direction = match (left, right) {
            (false, true) => HopDirection::Right,
            (true, false) => HopDirection::Left,
            (false, false) => HopDirection::Either,
            (true, true) => {
                let t = &self.toks[self.pos - 1];
                return Err(Self::error_at(t, "a relationship cannot point both ways"));
            }
        };
        let end = self.node_pattern()?;
        Ok(MatchPattern {
            start,
            hop: Some(Hop {
                rel: RelPattern { var, polarity, direction },
                end,
            }),
        })
    }

    fn resolve_var(&self, name: &str, at: &Token) -> Result<VarKind, QueryError> {
        self.vars.get(name).copied().ok_or_else(|| QueryError::UnboundVariable {
            name: name.to_string(),
            line: at.line,
            column: at.column,
        })
    }

    fn prop_ref(&mut self) -> Result<PropRef, QueryError> {
        let (var, at) = self.variable()?;
        let kind = self.resolve_var(&var, &at)?;
        self.sym('.')?;
        let t = self.next();
        let Tok::Ident(name) = &t.tok else {
            return Err(Self::error_at(&t, format!("expected a property name, found {}", t.describe())));
        };
        let property = match kind {
            VarKind::Node => name.parse::<NodeAttribute>().ok().map(Property::Node),
            VarKind::Edge => EdgeProperty::parse(name).map(Property::Edge),
        };
        let property = property.ok_or_else(|| QueryError::UnknownProperty {
            var: var.clone(),
            property: name.clone(),
            line: t.line,
            column: t.column,
        })?;
        Ok(PropRef { var, property })
    }

    fn disjunction(&mut self) -> Result<Cond, QueryError> {
        let mut left = self.conjunction()?;
        while self.eat_keyword("OR") {
            let right = self.conjunction()?;
            left = Cond::or(left, right);
        }
        Ok(left)
    }

    fn conjunction(&mut self) -> Result<Cond, QueryError> {
        let mut left = self.negation()?;
        while self.eat_keyword("AND") {
            let right = self.negation()?;
            left = Cond::and(left, right);
        }
        Ok(left)
    }

    fn negation(&mut self) -> Result<Cond, QueryError> {
        if self.eat_keyword("NOT") {
            return Ok(Cond::not(self.negation()?));
        }
        if self.eat_sym('(') {
            let inner = self.disjunction()?;
            self.sym(')')?;
            return Ok(inner);
        }
        let left = self.prop_ref()?;
        let op = if self.eat_keyword("CONTAINS") {
            CompareOp::Contains
        } else if self.eat_sym('=') {
            CompareOp::Equals
        } else if self.eat_keyword("STARTS") {
            self.keyword("WITH")?;
            CompareOp::StartsWith
        } else {
            return Err(self.unexpected("CONTAINS, = or STARTS WITH"));
        };
        let t = self.next();
        let Tok::Str(literal) = t.tok else {
            return Err(Self::error_at(&t, format!("expected a string literal, found {}", t.describe())));
        };
        Ok(Cond::Compare(Comparison { left, op, literal }))
    }

    fn return_item(&mut self) -> Result<ReturnItem, QueryError> {
        let (var, at) = self.variable()?;
        self.resolve_var(&var, &at)?;
        if self.peek().tok == Tok::Sym('.') {
            self.pos -= 1;
            Ok(ReturnItem::Property(self.prop_ref()?))
        } else {
            Ok(ReturnItem::Variable(var))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const KEYWORD_QUERY: &str =
        "MATCH (n:Component) WHERE n.name CONTAINS '3050' AND n.project_name CONTAINS 'M70t Gen5' RETURN n.original_rule";

    #[test]
    fn keyword_query_shape() {
        let q = parse_query(KEYWORD_QUERY).unwrap();
        let cond = q.condition.as_ref().unwrap();
        assert_eq!(cond.conjuncts().len(), 2);
        assert_eq!(q.returns.len(), 1);
        assert!(q.pattern.hop.is_none());
    }

    #[test]
    fn minimal_and_unbound() {
        let q = parse_query("MATCH (n) RETURN n").unwrap();
        assert_eq!(q.returns, vec![ReturnItem::Variable("n".into())]);
        match parse_query("MATCH (n) RETURN m") {
            Err(QueryError::UnboundVariable { name, line: 1, column: 18 }) => assert_eq!(name, "m"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn limits() {
        assert!(matches!(
            parse_query("MATCH (n) RETURN n LIMIT 0"),
            Err(QueryError::Syntax { column: 26, .. })
        ));
        assert_eq!(parse_query("match (n) return n limit 1").unwrap().limit, Some(1));
    }

    #[test]
    fn unknown_property_and_label() {
        assert!(matches!(
            parse_query("MATCH (n) WHERE n.colour = 'x' RETURN n"),
            Err(QueryError::UnknownProperty { column: 19, .. })
        ));
        assert!(matches!(
            parse_query("MATCH (n)-[e]->(m) RETURN e.name"),
            Err(QueryError::UnknownProperty { .. })
        ));
        assert!(matches!(parse_query("MATCH (n:Part) RETURN n"), Err(QueryError::Syntax { .. })));
    }

    #[test]
    fn hops() {
        let q = parse_query("MATCH (a)-[e:SHOULD_NOT]->(b) RETURN a.name, e.polarity, b").unwrap();
        let hop = q.pattern.hop.unwrap();
        assert_eq!(hop.rel.polarity, Some(Polarity::ShouldNot));
        assert_eq!(hop.rel.direction, HopDirection::Right);
        let q = parse_query("MATCH (a)<-[:SHOULD]-(b) RETURN b").unwrap();
        assert_eq!(q.pattern.hop.unwrap().rel.direction, HopDirection::Left);
        let q = parse_query("MATCH (a)-[]-(b) RETURN b").unwrap();
        assert_eq!(q.pattern.hop.unwrap().rel.direction, HopDirection::Either);
        assert!(parse_query("MATCH (a)<-[]->(b) RETURN b").is_err());
        assert!(parse_query("MATCH (a)-[a]->(b) RETURN b").is_err());
        assert!(parse_query("MATCH (a)-[e]->(a) RETURN e").is_ok());
    }

    #[test]
    fn precedence() {
        let q = parse_query("MATCH (n) WHERE n.name = 'a' OR n.name = 'b' AND NOT n.owner = 'c' RETURN n").unwrap();
        let Some(Cond::Or(_, right)) = q.condition else { panic!() };
        assert!(matches!(*right, Cond::And(_, ref r) if matches!(**r, Cond::Not(_))));
    }

    #[test]
    fn syntax_error_positions() {
        match parse_query("MATCH (n)\nWHERE n.name CONTAINS 3050\nRETURN n") {
            Err(QueryError::Syntax { line: 2, column: 23, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(parse_query("MATCH (n) RETURN n extra").is_err());
        assert!(parse_query("").is_err());
    }

    #[test]
    fn print_then_parse() {
        for text in [
            KEYWORD_QUERY,
            "MATCH (n) RETURN n",
            "MATCH (a)-[e:SHOULD]->(b:Component) WHERE NOT (a.name STARTS WITH \"x'y\" OR e.polarity = 'Should') AND b.date CONTAINS '2024' RETURN a, e, b.name LIMIT 3",
            "MATCH (n) WHERE n.name = 'a' AND (n.name = 'b' AND n.name = 'c') RETURN n.id",
            "MATCH (n) WHERE NOT NOT n.owner = 'a\\\\b' RETURN n",
        ] {
            let ast = parse_query(text).unwrap();
            let printed = ast.to_string();
            assert_eq!(parse_query(&printed).unwrap(), ast, "{printed}");
        }
    }
}
