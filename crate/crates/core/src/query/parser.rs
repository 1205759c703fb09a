//! Recursive-descent parser for quoted-atom Boolean queries.
//!
//! ```text
//! expr    := and_expr ( OR and_expr )*
//! and_expr:= primary ( (AND | NOT) primary )*
//! primary := STRING | "(" expr ")"
//! ```
//!
//! Keywords are case-insensitive; all operators associate left.

use super::{BoolOp, BooleanExpr};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("empty atom at byte {offset}")]
    EmptyAtom { offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::EmptyAtom { offset } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Atom(String),
    Op(BoolOp),
    LParen,
    RParen,
}

fn syntax(offset: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        offset,
        message: message.into(),
    }
}

fn lex(input: &str) -> Result<Vec<(usize, Token)>, ParseError> {
    let mut tokens = Vec::new();
    let mut chars = input.char_indices().peekable();
    while let Some(&(start, c)) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '(' => {
                chars.next();
                tokens.push((start, Token::LParen));
            }
            ')' => {
                chars.next();
                tokens.push((start, Token::RParen));
            }
            '"' => {
                chars.next();
                let mut text = String::new();
                let mut closed = false;
                while let Some((i, c)) = chars.next() {
                    match c {
                        '"' => {
                            closed = true;
                            break;
                        }
                        '\\' => match chars.next() {
                            Some((_, e @ ('"' | '\\'))) => text.push(e),
                            Some((j, _)) => return Err(syntax(j, "invalid escape")),
                            None => return Err(syntax(i, "unterminated escape")),
                        },
                        c => text.push(c),
                    }
                }
                if !closed {
                    return Err(syntax(start, "unterminated quoted atom"));
                }
                if text.trim().is_empty() {
                    return Err(ParseError::EmptyAtom { offset: start });
                }
                tokens.push((start, Token::Atom(text)));
            }
            c if c.is_alphabetic() => {
                let mut end = start;
                while let Some(&(i, c)) = chars.peek() {
                    if !c.is_alphanumeric() {
                        break;
                    }
                    end = i + c.len_utf8();
                    chars.next();
                }
                let word = &input[start..end];
                let op = match word.to_ascii_uppercase().as_str() {
                    "AND" => BoolOp::And,
                    "OR" => BoolOp::Or,
                    "NOT" => BoolOp::Not,
                    _ => {
                        return Err(syntax(
                            start,
                            format!("unexpected word {word:?}; atoms must be double-quoted"),
                        ))
                    }
                };
                tokens.push((start, Token::Op(op)));
            }
            other => return Err(syntax(start, format!("unexpected character {other:?}"))),
        }
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn expr(&mut self) -> Result<BooleanExpr, ParseError> {
        let mut lhs = self.and_expr()?;
        while let Some(Token::Op(BoolOp::Or)) = self.peek() {
            self.pos += 1;
            let rhs = self.and_expr()?;
            lhs = BooleanExpr::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<BooleanExpr, ParseError> {
        let mut lhs = self.primary()?;
        while let Some(Token::Op(op @ (BoolOp::And | BoolOp::Not))) = self.peek() {
            let op = *op;
            self.pos += 1;
            let rhs = self.primary()?;
            lhs = BooleanExpr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn primary(&mut self) -> Result<BooleanExpr, ParseError> {
        let offset = self.offset();
        match self.tokens.get(self.pos).map(|(_, t)| t.clone()) {
            Some(Token::Atom(text)) => {
                self.pos += 1;
                Ok(BooleanExpr::Atom(text))
            }
            Some(Token::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                match self.peek() {
                    Some(Token::RParen) => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    _ => Err(syntax(self.offset(), "expected ')'")),
                }
            }
            Some(Token::Op(op)) => Err(syntax(
                offset,
                format!("expected an atom or '(' but found {}", op.keyword()),
            )),
            Some(Token::RParen) => Err(syntax(offset, "unexpected ')'")),
            None => Err(syntax(offset, "unexpected end of query")),
        }
    }
}

pub fn parse_boolean_query(text: &str) -> Result<BooleanExpr, ParseError> {
    let tokens = lex(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        end: text.len(),
    };
    let expr = p.expr()?;
    if p.pos != p.tokens.len() {
        return Err(syntax(p.offset(), "unexpected trailing input"));
    }
    Ok(expr)
}
