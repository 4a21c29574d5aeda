//! Tiny expression language for config values: numbers, bare words,
//! `name(args...)` calls and `[a, b, ...]` lists.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Word(String),
    Call(String, Vec<Expr>),
    List(Vec<Expr>),
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |items: &[Expr]| {
            items
                .iter()
                .map(|e| e.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        };
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Word(w) => f.write_str(w),
            Expr::Call(name, args) => write!(f, "{name}({})", join(args)),
            Expr::List(items) => write!(f, "[{}]", join(items)),
        }
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, String> {
        let mut p = Parser {
            s: src.as_bytes(),
            pos: 0,
        };
        let e = p.expr()?;
        p.ws();
        if p.pos != p.s.len() {
            return Err(format!(
                "unexpected '{}' at column {}",
                &src[p.pos..],
                p.pos + 1
            ));
        }
        Ok(e)
    }

    pub fn num(&self) -> Result<f64, String> {
        match self {
            Expr::Num(v) => Ok(*v),
            other => Err(format!("expected a number, got '{other}'")),
        }
    }

    pub fn list(&self) -> Result<&[Expr], String> {
        match self {
            Expr::List(items) => Ok(items),
            other => Err(format!("expected a [list], got '{other}'")),
        }
    }

    /// Name and arguments; a bare word is a call with no arguments.
    pub fn head(&self) -> Result<(&str, &[Expr]), String> {
        match self {
            Expr::Word(w) => Ok((w, &[])),
            Expr::Call(name, args) => Ok((name, args)),
            other => Err(format!("expected a name, got '{other}'")),
        }
    }
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

const STOP: &[u8] = b"()[], \t";

impl Parser<'_> {
    fn ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Expr, String> {
        self.ws();
        match self.peek() {
            None => Err("unexpected end of expression".into()),
            Some(b'[') => {
                self.pos += 1;
                Ok(Expr::List(self.items(b']')?))
            }
            Some(c) if STOP.contains(&c) => Err(format!(
                "unexpected '{}' at column {}",
                c as char,
                self.pos + 1
            )),
            Some(_) => {
                let start = self.pos;
                while self.peek().is_some_and(|c| !STOP.contains(&c)) {
                    self.pos += 1;
                }
                let word = std::str::from_utf8(&self.s[start..self.pos])
                    .expect("ascii boundaries")
                    .to_string();
                self.ws();
                if self.peek() == Some(b'(') {
                    self.pos += 1;
                    return Ok(Expr::Call(word, self.items(b')')?));
                }
                Ok(word.parse::<f64>().map_or(Expr::Word(word), Expr::Num))
            }
        }
    }

    fn items(&mut self, close: u8) -> Result<Vec<Expr>, String> {
        let mut out = Vec::new();
        self.ws();
        if self.peek() == Some(close) {
            self.pos += 1;
            return Ok(out);
        }
        loop {
            out.push(self.expr()?);
            self.ws();
            match self.peek() {
                Some(b',') => self.pos += 1,
                Some(c) if c == close => {
                    self.pos += 1;
                    return Ok(out);
                }
                _ => {
                    return Err(format!(
                        "expected ',' or '{}' at column {}",
                        close as char,
                        self.pos + 1
                    ))
                }
            }
        }
    }
}
