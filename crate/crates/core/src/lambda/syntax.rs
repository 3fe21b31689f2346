//! Surface syntax.
//!
//! ```text
//! expr  := abs | app
//! abs   := ("\" | "λ") ident "." expr
//! app   := atom { atom }
//! atom  := ident | "(" expr ")"
//! ident := ASCII letter { ASCII alphanumeric }
//! ```
//!
//! Application associates to the left and abstraction bodies extend as far
//! right as possible.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use super::expr::{Kind, LambdaExpr};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("unexpected {found} at offset {pos}, expected {expected}")]
    Unexpected {
        pos: usize,
        found: String,
        expected: &'static str,
    },
    #[error("unexpected end of input, expected {expected}")]
    UnexpectedEnd { expected: &'static str },
    #[error("unbound variable `{name}` at offset {pos}")]
    UnboundVariable { name: String, pos: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Lambda,
    Dot,
    Open,
    Close,
    Ident(String),
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Lambda => f.write_str("`\\`"),
            Token::Dot => f.write_str("`.`"),
            Token::Open => f.write_str("`(`"),
            Token::Close => f.write_str("`)`"),
            Token::Ident(s) => write!(f, "identifier `{s}`"),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>, ParseError> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '\\' | 'λ' => {
                chars.next();
                out.push((pos, Token::Lambda));
            }
            '.' => {
                chars.next();
                out.push((pos, Token::Dot));
            }
            '(' => {
                chars.next();
                out.push((pos, Token::Open));
            }
            ')' => {
                chars.next();
                out.push((pos, Token::Close));
            }
            c if c.is_ascii_alphabetic() => {
                let mut name = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if !c.is_ascii_alphanumeric() {
                        break;
                    }
                    name.push(c);
                    chars.next();
                }
                out.push((pos, Token::Ident(name)));
            }
            other => {
                return Err(ParseError::Unexpected {
                    pos,
                    found: format!("character `{other}`"),
                    expected: "an expression",
                })
            }
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    at: usize,
    scope: Vec<String>,
    closed: bool,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.at).map(|(_, t)| t)
    }

    fn unexpected(&self, expected: &'static str) -> ParseError {
        match self.tokens.get(self.at) {
            Some((pos, tok)) => ParseError::Unexpected {
                pos: *pos,
                found: tok.to_string(),
                expected,
            },
            None => ParseError::UnexpectedEnd { expected },
        }
    }

    fn expect(&mut self, want: Token, expected: &'static str) -> Result<(), ParseError> {
        if self.peek() == Some(&want) {
            self.at += 1;
            Ok(())
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn expr(&mut self) -> Result<LambdaExpr, ParseError> {
        if self.peek() == Some(&Token::Lambda) {
            self.at += 1;
            let name = match self.peek() {
                Some(Token::Ident(name)) => name.clone(),
                _ => return Err(self.unexpected("a binder name")),
            };
            self.at += 1;
            self.expect(Token::Dot, "`.`")?;
            self.scope.push(name);
            let body = self.expr();
            self.scope.pop();
            return Ok(LambdaExpr::abs(body?));
        }
        let mut acc = self.atom()?;
        while matches!(self.peek(), Some(Token::Ident(_) | Token::Open)) {
            let arg = self.atom()?;
            acc = LambdaExpr::app(acc, arg);
        }
        Ok(acc)
    }

    fn atom(&mut self) -> Result<LambdaExpr, ParseError> {
        match self.tokens.get(self.at).cloned() {
            Some((pos, Token::Ident(name))) => {
                self.at += 1;
                match self.scope.iter().rev().position(|n| *n == name) {
                    Some(index) => Ok(LambdaExpr::var(index as u32)),
                    None if self.closed => Err(ParseError::UnboundVariable { name, pos }),
                    None => Ok(LambdaExpr::free(name)),
                }
            }
            Some((_, Token::Open)) => {
                self.at += 1;
                let inner = self.expr()?;
                self.expect(Token::Close, "`)`")?;
                Ok(inner)
            }
            _ => Err(self.unexpected("a variable or `(`")),
        }
    }
}

fn parse_with(text: &str, closed: bool) -> Result<LambdaExpr, ParseError> {
    let mut parser = Parser {
        tokens: tokenize(text)?,
        at: 0,
        scope: Vec::new(),
        closed,
    };
    let expr = parser.expr()?;
    if parser.at < parser.tokens.len() {
        return Err(parser.unexpected("end of input"));
    }
    Ok(expr)
}

/// Parses an expression; unbound identifiers become free variables.
pub fn parse(text: &str) -> Result<LambdaExpr, ParseError> {
    parse_with(text, false)
}

/// Parses an expression that must be closed.
pub fn parse_closed(text: &str) -> Result<LambdaExpr, ParseError> {
    parse_with(text, true)
}

impl FromStr for LambdaExpr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

/// Binder names in the order they are handed out: `a`..`z`, then `a1`..`z1`, ...
fn nth_name(n: usize) -> String {
    let letter = (b'a' + (n % 26) as u8) as char;
    match n / 26 {
        0 => letter.to_string(),
        round => format!("{letter}{round}"),
    }
}

struct Printer<'a> {
    free: Vec<Arc<str>>,
    names: Vec<String>,
    next: usize,
    out: &'a mut String,
}

impl Printer<'_> {
    /// Name for the binder introduced at `depth` (0 = outermost), skipping
    /// anything that would shadow a free variable.
    fn name(&mut self, depth: usize) -> &str {
        while self.names.len() <= depth {
            let candidate = nth_name(self.next);
            self.next += 1;
            if !self.free.iter().any(|f| **f == *candidate) {
                self.names.push(candidate);
            }
        }
        &self.names[depth]
    }

    fn write(&mut self, e: &LambdaExpr, depth: usize, parens: bool) {
        match e.kind() {
            Kind::Var(i) => {
                let name = self.name(depth - 1 - *i as usize).to_string();
                self.out.push_str(&name);
            }
            Kind::Free(n) => self.out.push_str(n),
            Kind::Abs(body) => {
                if parens {
                    self.out.push('(');
                }
                let name = self.name(depth).to_string();
                self.out.push('\\');
                self.out.push_str(&name);
                self.out.push('.');
                self.write(body, depth + 1, false);
                if parens {
                    self.out.push(')');
                }
            }
            Kind::App(f, a) => {
                if parens {
                    self.out.push('(');
                }
                self.write_function(f, depth);
                self.out.push(' ');
                self.write(a, depth, !is_atomic(a));
                if parens {
                    self.out.push(')');
                }
            }
        }
    }

    fn write_function(&mut self, f: &LambdaExpr, depth: usize) {
        match f.kind() {
            // left spine of an application needs no parentheses
            Kind::App(..) => self.write(f, depth, false),
            _ => self.write(f, depth, !is_atomic(f)),
        }
    }
}

fn is_atomic(e: &LambdaExpr) -> bool {
    matches!(e.kind(), Kind::Var(_) | Kind::Free(_))
}

impl fmt::Display for LambdaExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.loose_bound() > 0 {
            // dangling indices have no surface name; show them raw
            return write!(f, "{}", RawIndices(self));
        }
        let mut out = String::new();
        let mut printer = Printer {
            free: self.free_names(),
            names: Vec::new(),
            next: 0,
            out: &mut out,
        };
        printer.write(self, 0, false);
        f.write_str(&out)
    }
}

struct RawIndices<'a>(&'a LambdaExpr);

impl fmt::Display for RawIndices<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0.kind() {
            Kind::Var(i) => write!(f, "#{i}"),
            Kind::Free(n) => f.write_str(n),
            Kind::Abs(b) => write!(f, "(\\.{})", RawIndices(b)),
            Kind::App(g, a) => write!(f, "({} {})", RawIndices(g), RawIndices(a)),
        }
    }
}

/// Canonical text for an expression.
pub fn print(expr: &LambdaExpr) -> String {
    expr.to_string()
}
