//! Recursive-descent parser for the unified keyword syntax.
//!
//! ```text
//! query   := or_expr EOF
//! or_expr := and_expr ("OR" and_expr)*
//! and_expr:= unary (["AND"] unary)*      -- adjacency is conjunction
//! unary   := "NOT" unary | primary
//! primary := WORD | PHRASE | "(" or_expr ")"
//! ```
//! Only uppercase `AND`/`OR`/`NOT` are operators; lowercase spellings are
//! ordinary terms.

use thiserror::Error;

use super::ast::QueryAst;
use super::matcher::word_tokens;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} at position {position}")]
pub struct ParseError {
    /// Character offset into the query text.
    pub position: usize,
    pub message: String,
}

impl ParseError {
    fn new(position: usize, message: impl Into<String>) -> Self {
        Self {
            position,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Phrase(String),
    And,
    Or,
    Not,
    LParen,
    RParen,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '(' {
            out.push((i, Tok::LParen));
            i += 1;
        } else if c == ')' {
            out.push((i, Tok::RParen));
            i += 1;
        } else if c == '"' {
            let start = i;
            let end = chars[i + 1..]
                .iter()
                .position(|&c| c == '"')
                .map(|p| p + i + 1)
                .ok_or_else(|| ParseError::new(start, "unterminated phrase"))?;
            let body: String = chars[i + 1..end].iter().collect();
            let body = body.split_whitespace().collect::<Vec<_>>().join(" ");
            if word_tokens(&body).is_empty() {
                return Err(ParseError::new(start, "empty phrase"));
            }
            out.push((start, Tok::Phrase(body)));
            i = end + 1;
        } else {
            let start = i;
            while i < chars.len()
                && !chars[i].is_whitespace()
                && !matches!(chars[i], '(' | ')' | '"')
            {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            let tok = match word.as_str() {
                "AND" => Tok::And,
                "OR" => Tok::Or,
                "NOT" => Tok::Not,
                _ => {
                    if word_tokens(&word).is_empty() {
                        return Err(ParseError::new(
                            start,
                            format!("term {word:?} has no word characters"),
                        ));
                    }
                    Tok::Word(word)
                }
            };
            out.push((start, tok));
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn or_expr(&mut self) -> Result<QueryAst, ParseError> {
        let mut parts = vec![self.and_expr()?];
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            parts.push(self.and_expr()?);
        }
        Ok(QueryAst::or(parts))
    }

    fn and_expr(&mut self) -> Result<QueryAst, ParseError> {
        let mut parts = vec![self.unary()?];
        loop {
            match self.peek() {
                Some(Tok::And) => {
                    self.pos += 1;
                    parts.push(self.unary()?);
                }
                Some(Tok::Word(_) | Tok::Phrase(_) | Tok::LParen | Tok::Not) => {
                    parts.push(self.unary()?);
                }
                _ => break,
            }
        }
        Ok(QueryAst::and(parts))
    }

    fn unary(&mut self) -> Result<QueryAst, ParseError> {
        if self.peek() == Some(&Tok::Not) {
            self.pos += 1;
            return Ok(QueryAst::negate(self.unary()?));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<QueryAst, ParseError> {
        let at = self.offset();
        let tok = self.toks.get(self.pos).map(|(_, t)| t.clone());
        match tok {
            Some(Tok::Word(w)) => {
                self.pos += 1;
                Ok(QueryAst::Term(w))
            }
            Some(Tok::Phrase(p)) => {
                self.pos += 1;
                Ok(QueryAst::Phrase(p))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.or_expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(ParseError::new(at, "unbalanced parenthesis"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(Tok::RParen) => Err(ParseError::new(at, "unexpected ')'")),
            Some(Tok::And | Tok::Or | Tok::Not) => Err(ParseError::new(at, "dangling operator")),
            None => Err(ParseError::new(at, "dangling operator or empty group")),
        }
    }
}

pub fn parse_query(text: &str) -> Result<QueryAst, ParseError> {
    let toks = lex(text)?;
    if toks.is_empty() {
        return Err(ParseError::new(0, "empty query"));
    }
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.chars().count(),
    };
    let ast = p.or_expr()?;
    if p.pos < p.toks.len() {
        let at = p.offset();
        return Err(match p.peek() {
            Some(Tok::RParen) => ParseError::new(at, "unbalanced parenthesis"),
            _ => ParseError::new(at, "unexpected token"),
        });
    }
    Ok(ast)
}
