//! Minimal arithmetic expressions over `t, x, y, v`.
//!
//! Grammar (lowest precedence first):
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := primary ('^' unary)?
//! primary := number | variable | function '(' sum (',' sum)* ')' | '(' sum ')'
//! ```
//!
//! `^` is right associative and binds tighter than unary minus, so `-x^2`
//! is `-(x^2)`.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vars {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Var {
    T,
    X,
    Y,
    V,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Unary {
    Exp,
    Log,
    Abs,
    Sqrt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Binary {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Min,
    Max,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(Var),
    Neg(Box<Node>),
    Call(Unary, Box<Node>),
    Bin(Binary, Box<Node>, Box<Node>),
}

/// A parsed expression. Evaluation is pure and deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
}

impl Expr {
    pub fn parse(text: &str) -> Result<Self> {
        let tokens = tokenize(text)?;
        let mut parser = Parser { tokens: &tokens, pos: 0, len: text.len() };
        let root = parser.sum()?;
        if let Some(tok) = parser.peek() {
            return Err(Error::Syntax {
                offset: tok.offset,
                message: format!("unexpected {}", tok.kind),
            });
        }
        Ok(Self { source: text.to_string(), root })
    }

    pub fn eval(&self, vars: &Vars) -> f64 {
        eval(&self.root, vars)
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

fn eval(node: &Node, vars: &Vars) -> f64 {
    match node {
        Node::Num(c) => *c,
        Node::Var(Var::T) => vars.t,
        Node::Var(Var::X) => vars.x,
        Node::Var(Var::Y) => vars.y,
        Node::Var(Var::V) => vars.v,
        Node::Neg(a) => -eval(a, vars),
        Node::Call(f, a) => {
            let a = eval(a, vars);
            match f {
                Unary::Exp => a.exp(),
                Unary::Log => a.ln(),
                Unary::Abs => a.abs(),
                Unary::Sqrt => a.sqrt(),
            }
        }
        Node::Bin(op, a, b) => {
            let (a, b) = (eval(a, vars), eval(b, vars));
            match op {
                Binary::Add => a + b,
                Binary::Sub => a - b,
                Binary::Mul => a * b,
                Binary::Div => a / b,
                Binary::Pow => pow(a, b),
                Binary::Min => a.min(b),
                Binary::Max => a.max(b),
            }
        }
    }
}

fn pow(a: f64, b: f64) -> f64 {
    if b.fract() == 0.0 && b.abs() <= i32::MAX as f64 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Num(c) => write!(f, "number {c}"),
            TokenKind::Ident(name) => write!(f, "identifier `{name}`"),
            TokenKind::Op(c) => write!(f, "'{c}'"),
            TokenKind::LParen => f.write_str("'('"),
            TokenKind::RParen => f.write_str("')'"),
            TokenKind::Comma => f.write_str("','"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    offset: usize,
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let kind = if c.is_ascii_digit() || c == '.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let literal = &text[start..i];
            let value = literal.parse::<f64>().map_err(|_| Error::Syntax {
                offset: start,
                message: format!("malformed number `{literal}`"),
            })?;
            TokenKind::Num(value)
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            TokenKind::Ident(text[start..i].to_string())
        } else {
            i += 1;
            match c {
                '+' | '-' | '*' | '/' | '^' => TokenKind::Op(c),
                '(' => TokenKind::LParen,
                ')' => TokenKind::RParen,
                ',' => TokenKind::Comma,
                _ => {
                    return Err(Error::Syntax {
                        offset: start,
                        message: format!("unexpected character '{c}'"),
                    })
                }
            }
        };
        tokens.push(Token { kind, offset: start });
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    len: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn eat_op(&mut self, ops: &[char]) -> Option<char> {
        match self.peek() {
            Some(Token { kind: TokenKind::Op(c), .. }) if ops.contains(c) => {
                let c = *c;
                self.pos += 1;
                Some(c)
            }
            _ => None,
        }
    }

    fn expect(&mut self, kind: TokenKind) -> Result<()> {
        match self.peek() {
            Some(tok) if tok.kind == kind => {
                self.pos += 1;
                Ok(())
            }
            Some(tok) => Err(Error::Syntax {
                offset: tok.offset,
                message: format!("expected {kind}, found {}", tok.kind),
            }),
            None => Err(Error::Syntax { offset: self.len, message: format!("expected {kind}") }),
        }
    }

    fn sum(&mut self) -> Result<Node> {
        let mut lhs = self.product()?;
        while let Some(op) = self.eat_op(&['+', '-']) {
            let rhs = self.product()?;
            let op = if op == '+' { Binary::Add } else { Binary::Sub };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.eat_op(&['*', '/']) {
            let rhs = self.unary()?;
            let op = if op == '*' { Binary::Mul } else { Binary::Div };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        match self.eat_op(&['-', '+']) {
            Some('-') => Ok(Node::Neg(Box::new(self.unary()?))),
            Some(_) => self.unary(),
            None => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.primary()?;
        if self.eat_op(&['^']).is_some() {
            let exponent = self.unary()?;
            return Ok(Node::Bin(Binary::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node> {
        let Some(tok) = self.peek().cloned() else {
            return Err(Error::Syntax { offset: self.len, message: "unexpected end of input".into() });
        };
        self.pos += 1;
        match tok.kind {
            TokenKind::Num(c) => Ok(Node::Num(c)),
            TokenKind::LParen => {
                let inner = self.sum()?;
                self.expect(TokenKind::RParen)?;
                Ok(inner)
            }
            TokenKind::Ident(name) => self.identifier(&name, tok.offset),
            other => Err(Error::Syntax { offset: tok.offset, message: format!("unexpected {other}") }),
        }
    }

    fn identifier(&mut self, name: &str, offset: usize) -> Result<Node> {
        let var = match name {
            "t" => Some(Var::T),
            "x" => Some(Var::X),
            "y" => Some(Var::Y),
            "v" => Some(Var::V),
            _ => None,
        };
        if let Some(var) = var {
            return Ok(Node::Var(var));
        }
        let unary = match name {
            "exp" => Some(Unary::Exp),
            "log" => Some(Unary::Log),
            "abs" => Some(Unary::Abs),
            "sqrt" => Some(Unary::Sqrt),
            _ => None,
        };
        let binary = match name {
            "min" => Some(Binary::Min),
            "max" => Some(Binary::Max),
            _ => None,
        };
        if unary.is_none() && binary.is_none() {
            return Err(Error::UnknownIdentifier { name: name.to_string(), offset });
        }
        self.expect(TokenKind::LParen)?;
        let first = self.sum()?;
        let node = if let Some(f) = unary {
            Node::Call(f, Box::new(first))
        } else {
            self.expect(TokenKind::Comma)?;
            let second = self.sum()?;
            Node::Bin(binary.unwrap(), Box::new(first), Box::new(second))
        };
        self.expect(TokenKind::RParen)?;
        Ok(node)
    }
}
