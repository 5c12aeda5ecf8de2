//! Lexer and expression parser for the Twelf-style concrete syntax shared by
//! signatures and terms.
//!
//! Application binds tightest, `->` is right associative, `<-` is left
//! associative and reverses its operands, and the binder forms `{x:A} e` and
//! `[x] e` extend as far to the right as possible.

use std::fmt;

use thiserror::Error;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{pos}: {msg}")]
pub struct SyntaxError {
    pub pos: Pos,
    pub msg: String,
}

impl SyntaxError {
    pub fn new(pos: Pos, msg: impl Into<String>) -> Self {
        SyntaxError {
            pos,
            msg: msg.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Directive(String),
    Dot,
    Colon,
    LParen,
    RParen,
    LBrack,
    RBrack,
    LBrace,
    RBrace,
    Arrow,
    BackArrow,
    Eq,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Directive(s) => write!(f, "`%{s}`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBrack => f.write_str("`[`"),
            Tok::RBrack => f.write_str("`]`"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::BackArrow => f.write_str("`<-`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

fn is_reserved(c: char) -> bool {
    c.is_whitespace() || matches!(c, '.' | ':' | '(' | ')' | '[' | ']' | '{' | '}' | '%' | '"')
}

pub fn lex(text: &str) -> Result<Vec<Token>, SyntaxError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let (mut line, mut col) = (1usize, 1usize);

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '%' {
            let next = chars.get(i + 1).copied();
            if next == Some('%') || next.is_none_or(|n| n.is_whitespace()) {
                while i < chars.len() && chars[i] != '\n' {
                    bump!();
                }
                continue;
            }
            if next == Some('{') {
                bump!();
                bump!();
                loop {
                    if i >= chars.len() {
                        return Err(SyntaxError::new(pos, "unterminated block comment"));
                    }
                    if chars[i] == '}' && chars.get(i + 1) == Some(&'%') {
                        bump!();
                        bump!();
                        break;
                    }
                    bump!();
                }
                continue;
            }
            bump!();
            let start = i;
            while i < chars.len() && !is_reserved(chars[i]) {
                bump!();
            }
            let name: String = chars[start..i].iter().collect();
            out.push(Token {
                tok: Tok::Directive(name),
                pos,
            });
            continue;
        }
        let simple = match c {
            '.' => Some(Tok::Dot),
            ':' => Some(Tok::Colon),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBrack),
            ']' => Some(Tok::RBrack),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            '"' => return Err(SyntaxError::new(pos, "string literals are not supported")),
            _ => None,
        };
        if let Some(tok) = simple {
            bump!();
            out.push(Token { tok, pos });
            continue;
        }
        let start = i;
        while i < chars.len() && !is_reserved(chars[i]) {
            bump!();
        }
        let word: String = chars[start..i].iter().collect();
        let tok = match word.as_str() {
            "->" => Tok::Arrow,
            "<-" => Tok::BackArrow,
            "=" => Tok::Eq,
            _ => Tok::Ident(word),
        };
        out.push(Token { tok, pos });
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: Pos { line, col },
    });
    Ok(out)
}

/// Untyped expression tree. Types, kinds and terms all parse to this.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Ident(String, Pos),
    App(Box<Expr>, Box<Expr>),
    /// `dom -> cod`
    Arrow(Box<Expr>, Box<Expr>),
    Pi {
        var: String,
        ty: Option<Box<Expr>>,
        body: Box<Expr>,
        pos: Pos,
    },
    Lam {
        var: String,
        ty: Option<Box<Expr>>,
        body: Box<Expr>,
        pos: Pos,
    },
}

impl Expr {
    pub fn pos(&self) -> Pos {
        match self {
            Expr::Ident(_, p) => *p,
            Expr::App(f, _) => f.pos(),
            Expr::Arrow(d, _) => d.pos(),
            Expr::Pi { pos, .. } | Expr::Lam { pos, .. } => *pos,
        }
    }

    /// Splits an application spine into its head and arguments.
    pub fn spine(&self) -> (&Expr, Vec<&Expr>) {
        let mut args = Vec::new();
        let mut cur = self;
        while let Expr::App(f, a) = cur {
            args.push(a.as_ref());
            cur = f;
        }
        args.reverse();
        (cur, args)
    }

    /// Replaces free occurrences of identifiers according to `lookup`.
    pub fn substitute(&self, lookup: &dyn Fn(&str) -> Option<Expr>) -> Expr {
        self.subst_inner(lookup, &mut Vec::new())
    }

    fn subst_inner(&self, lookup: &dyn Fn(&str) -> Option<Expr>, bound: &mut Vec<String>) -> Expr {
        match self {
            Expr::Ident(name, pos) => {
                if bound.iter().any(|b| b == name) {
                    Expr::Ident(name.clone(), *pos)
                } else {
                    lookup(name).unwrap_or_else(|| Expr::Ident(name.clone(), *pos))
                }
            }
            Expr::App(f, a) => Expr::App(
                Box::new(f.subst_inner(lookup, bound)),
                Box::new(a.subst_inner(lookup, bound)),
            ),
            Expr::Arrow(d, c) => Expr::Arrow(
                Box::new(d.subst_inner(lookup, bound)),
                Box::new(c.subst_inner(lookup, bound)),
            ),
            Expr::Pi { var, ty, body, pos } | Expr::Lam { var, ty, body, pos } => {
                let ty = ty.as_ref().map(|t| Box::new(t.subst_inner(lookup, bound)));
                bound.push(var.clone());
                let body = Box::new(body.subst_inner(lookup, bound));
                bound.pop();
                let (var, pos) = (var.clone(), *pos);
                if matches!(self, Expr::Pi { .. }) {
                    Expr::Pi { var, ty, body, pos }
                } else {
                    Expr::Lam { var, ty, body, pos }
                }
            }
        }
    }
}

pub struct Parser {
    toks: Vec<Token>,
    at: usize,
}

impl Parser {
    pub fn new(toks: Vec<Token>) -> Self {
        Parser { toks, at: 0 }
    }

    pub fn from_text(text: &str) -> Result<Self, SyntaxError> {
        Ok(Parser::new(lex(text)?))
    }

    pub fn peek(&self) -> &Token {
        &self.toks[self.at]
    }

    pub fn next(&mut self) -> Token {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    pub fn at_eof(&self) -> bool {
        self.peek().tok == Tok::Eof
    }

    pub fn eat(&mut self, tok: &Tok) -> bool {
        if &self.peek().tok == tok {
            self.next();
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, tok: &Tok) -> Result<Pos, SyntaxError> {
        let t = self.peek().clone();
        if &t.tok == tok {
            self.next();
            Ok(t.pos)
        } else {
            Err(SyntaxError::new(t.pos, format!("expected {tok}, found {}", t.tok)))
        }
    }

    pub fn ident(&mut self) -> Result<(String, Pos), SyntaxError> {
        let t = self.next();
        match t.tok {
            Tok::Ident(s) => Ok((s, t.pos)),
            other => Err(SyntaxError::new(t.pos, format!("expected identifier, found {other}"))),
        }
    }

    /// Skips tokens up to and including the next `.`.
    pub fn skip_to_dot(&mut self) {
        while !self.at_eof() {
            if self.next().tok == Tok::Dot {
                break;
            }
        }
    }

    pub fn expr(&mut self) -> Result<Expr, SyntaxError> {
        let mut acc = self.forward()?;
        while self.eat(&Tok::BackArrow) {
            let rhs = self.forward()?;
            acc = Expr::Arrow(Box::new(rhs), Box::new(acc));
        }
        Ok(acc)
    }

    fn forward(&mut self) -> Result<Expr, SyntaxError> {
        let lhs = self.app()?;
        if self.eat(&Tok::Arrow) {
            let rhs = self.forward()?;
            Ok(Expr::Arrow(Box::new(lhs), Box::new(rhs)))
        } else {
            Ok(lhs)
        }
    }

    fn starts_atom(&self) -> bool {
        matches!(
            self.peek().tok,
            Tok::Ident(_) | Tok::LParen | Tok::LBrack | Tok::LBrace
        )
    }

    fn app(&mut self) -> Result<Expr, SyntaxError> {
        let (mut head, mut closed) = self.atom()?;
        while closed && self.starts_atom() {
            let (arg, c) = self.atom()?;
            head = Expr::App(Box::new(head), Box::new(arg));
            closed = c;
        }
        Ok(head)
    }

    /// Parses one atom; the flag is false for binder forms, whose body
    /// swallows the rest of the application.
    fn atom(&mut self) -> Result<(Expr, bool), SyntaxError> {
        let t = self.next();
        match t.tok {
            Tok::Ident(s) => Ok((Expr::Ident(s, t.pos), true)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(&Tok::RParen)?;
                Ok((e, true))
            }
            Tok::LBrack | Tok::LBrace => {
                let pi = t.tok == Tok::LBrace;
                let (var, _) = self.ident()?;
                let ty = if self.eat(&Tok::Colon) {
                    Some(Box::new(self.expr()?))
                } else {
                    None
                };
                self.expect(if pi { &Tok::RBrace } else { &Tok::RBrack })?;
                let body = Box::new(self.expr()?);
                let e = if pi {
                    Expr::Pi {
                        var,
                        ty,
                        body,
                        pos: t.pos,
                    }
                } else {
                    Expr::Lam {
                        var,
                        ty,
                        body,
                        pos: t.pos,
                    }
                };
                Ok((e, false))
            }
            other => Err(SyntaxError::new(t.pos, format!("unexpected {other}"))),
        }
    }
}

/// Parses a complete expression; trailing input is an error.
pub fn parse_expr(text: &str) -> Result<Expr, SyntaxError> {
    let mut p = Parser::from_text(text)?;
    let e = p.expr()?;
    if !p.at_eof() {
        let t = p.peek();
        return Err(SyntaxError::new(t.pos, format!("unexpected {} after expression", t.tok)));
    }
    Ok(e)
}
