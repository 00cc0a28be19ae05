//! Tokenizer for the Lisp-style PDDL surface syntax.
//!
//! Recognized character classes: whitespace, `(`, `)`, `;` comments running
//! to end of line, keywords (`:` + identifier), variables (`?` + identifier),
//! a standalone `-` type separator, and identifiers (ASCII letter followed by
//! letters, digits, `-` or `_`). Anything else is a [`LexError`].

use std::fmt;

use thiserror::Error;

use super::diagnostic::{Diagnostic, DiagnosticCode, Span};
use crate::model::is_identifier_char;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    LParen,
    RParen,
    /// `:name`, stored lowercase with the colon.
    Keyword,
    /// `?name`, stored lowercase with the question mark.
    Variable,
    Ident,
    Dash,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    /// Normalized (lowercase) token text.
    pub text: String,
    pub span: Span,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {message}")]
pub struct LexError {
    pub message: String,
    pub span: Span,
}

impl From<LexError> for Diagnostic {
    fn from(e: LexError) -> Self {
        Diagnostic::error(DiagnosticCode::Lex, e.span, e.message)
    }
}

struct Cursor<'a> {
    text: &'a str,
    offset: usize,
    line: usize,
    column: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.text[self.offset..].chars().next()
    }

    fn peek_second(&self) -> Option<char> {
        let mut it = self.text[self.offset..].chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.offset += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn mark(&self) -> Span {
        Span {
            offset: self.offset,
            len: 0,
            line: self.line,
            column: self.column,
        }
    }

    fn finish(&self, start: Span) -> Span {
        Span {
            len: self.offset - start.offset,
            ..start
        }
    }

    fn eat_identifier_tail(&mut self) {
        while matches!(self.peek(), Some(c) if is_identifier_char(c)) {
            self.bump();
        }
    }
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, LexError> {
    let mut cur = Cursor {
        text,
        offset: 0,
        line: 1,
        column: 1,
    };
    let mut tokens = Vec::new();
    while let Some(c) = cur.peek() {
        let start = cur.mark();
        let kind = match c {
            c if c.is_whitespace() => {
                cur.bump();
                continue;
            }
            ';' => {
                while !matches!(cur.peek(), None | Some('\n')) {
                    cur.bump();
                }
                continue;
            }
            '(' => {
                cur.bump();
                TokenKind::LParen
            }
            ')' => {
                cur.bump();
                TokenKind::RParen
            }
            ':' | '?' => {
                cur.bump();
                if !matches!(cur.peek(), Some(n) if n.is_ascii_alphabetic()) {
                    cur.bump();
                    return Err(LexError {
                        message: format!("`{c}` must be followed by an identifier"),
                        span: cur.finish(start),
                    });
                }
                cur.eat_identifier_tail();
                if c == ':' {
                    TokenKind::Keyword
                } else {
                    TokenKind::Variable
                }
            }
            '-' => {
                if matches!(cur.peek_second(), Some(n) if is_identifier_char(n)) {
                    cur.bump();
                    cur.eat_identifier_tail();
                    return Err(LexError {
                        message: format!(
                            "identifier `{}` must start with a letter",
                            &text[start.offset..cur.offset]
                        ),
                        span: cur.finish(start),
                    });
                }
                cur.bump();
                TokenKind::Dash
            }
            c if c.is_ascii_alphabetic() => {
                cur.eat_identifier_tail();
                TokenKind::Ident
            }
            other => {
                cur.bump();
                if other.is_ascii_digit() {
                    cur.eat_identifier_tail();
                }
                return Err(LexError {
                    message: format!("illegal character `{other}`"),
                    span: cur.finish(start),
                });
            }
        };
        let span = cur.finish(start);
        tokens.push(Token {
            kind,
            text: text[span.offset..span.offset + span.len].to_ascii_lowercase(),
            span,
        });
    }
    Ok(tokens)
}

/// Parenthesized expression tree over tokens.
#[derive(Debug, Clone)]
pub enum Sexp {
    Atom(Token),
    List { items: Vec<Sexp>, span: Span },
}

impl Sexp {
    pub fn span(&self) -> Span {
        match self {
            Sexp::Atom(t) => t.span,
            Sexp::List { span, .. } => *span,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List { items, .. } => Some(items),
            Sexp::Atom(_) => None,
        }
    }

    pub fn as_token(&self) -> Option<&Token> {
        match self {
            Sexp::Atom(t) => Some(t),
            Sexp::List { .. } => None,
        }
    }

    /// Token text if this is an atom of the given kind.
    pub fn token_of(&self, kind: TokenKind) -> Option<&str> {
        self.as_token().filter(|t| t.kind == kind).map(|t| t.text.as_str())
    }

    /// Head keyword or identifier of a list, e.g. `and` in `(and ...)`.
    pub fn head(&self) -> Option<&str> {
        self.as_list()?.first()?.as_token().map(|t| t.text.as_str())
    }
}

/// Groups tokens into top-level expressions. Unbalanced parentheses are
/// reported at the offending parenthesis.
pub fn read_sexps(tokens: Vec<Token>) -> Result<Vec<Sexp>, Diagnostic> {
    let mut stack: Vec<(Span, Vec<Sexp>)> = Vec::new();
    let mut top = Vec::new();
    for token in tokens {
        match token.kind {
            TokenKind::LParen => stack.push((token.span, Vec::new())),
            TokenKind::RParen => {
                let Some((open, items)) = stack.pop() else {
                    return Err(Diagnostic::error(
                        DiagnosticCode::Syntax,
                        token.span,
                        "unmatched `)`",
                    ));
                };
                let list = Sexp::List {
                    items,
                    span: open.to(token.span),
                };
                match stack.last_mut() {
                    Some((_, parent)) => parent.push(list),
                    None => top.push(list),
                }
            }
            _ => match stack.last_mut() {
                Some((_, parent)) => parent.push(Sexp::Atom(token)),
                None => top.push(Sexp::Atom(token)),
            },
        }
    }
    if let Some((open, _)) = stack.pop() {
        return Err(Diagnostic::error(
            DiagnosticCode::Syntax,
            open,
            "unclosed `(`: missing `)` before end of input",
        ));
    }
    Ok(top)
}
