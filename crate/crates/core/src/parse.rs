//! A small recursive-descent parser for the polynomial/rational coefficient
//! schema accepted in CLI configs: numbers, coordinates x1..x99, + - * / ^,
//! parentheses, sin(...) and cos(...).

use crate::error::{GeoError, Result};
use crate::expr::ScalarField;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Coord(usize),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn lex(src: &str) -> Result<Vec<Tok>> {
    let b: Vec<char> = src.chars().collect();
    let mut i = 0;
    let mut out = Vec::new();
    while i < b.len() {
        let c = b[i];
        match c {
            ' ' | '\t' | '\n' => i += 1,
            '+' => {
                out.push(Tok::Plus);
                i += 1;
            }
            '-' => {
                out.push(Tok::Minus);
                i += 1;
            }
            '*' => {
                out.push(Tok::Star);
                i += 1;
            }
            '/' => {
                out.push(Tok::Slash);
                i += 1;
            }
            '^' => {
                out.push(Tok::Caret);
                i += 1;
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < b.len() && (b[i].is_ascii_digit() || b[i] == '.') {
                    i += 1;
                }
                // scientific part
                if i < b.len() && (b[i] == 'e' || b[i] == 'E') {
                    let mut j = i + 1;
                    if j < b.len() && (b[j] == '+' || b[j] == '-') {
                        j += 1;
                    }
                    if j < b.len() && b[j].is_ascii_digit() {
                        i = j;
                        while i < b.len() && b[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let s: String = b[start..i].iter().collect();
                let v = s
                    .parse::<f64>()
                    .map_err(|_| GeoError::Invalid(format!("bad number '{s}'")))?;
                out.push(Tok::Num(v));
            }
            'a'..='z' | 'A'..='Z' => {
                let start = i;
                while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == '_') {
                    i += 1;
                }
                let s: String = b[start..i].iter().collect();
                if let Some(rest) = s.strip_prefix('x') {
                    if let Ok(n) = rest.parse::<usize>() {
                        if n == 0 {
                            return Err(GeoError::Invalid("coordinates are 1-based (x1..)".into()));
                        }
                        out.push(Tok::Coord(n - 1));
                        continue;
                    }
                }
                out.push(Tok::Ident(s));
            }
            _ => return Err(GeoError::Invalid(format!("unexpected character '{c}'"))),
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
    dim: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        match self.next() {
            Some(got) if got == t => Ok(()),
            got => Err(GeoError::Invalid(format!("expected {t:?}, got {got:?}"))),
        }
    }

    // expr := term (('+'|'-') term)*
    fn expr(&mut self) -> Result<ScalarField> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.next();
                    acc = &acc + &self.term()?;
                }
                Some(Tok::Minus) => {
                    self.next();
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    // term := unary (('*'|'/') unary)*
    fn term(&mut self) -> Result<ScalarField> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.next();
                    acc = &acc * &self.unary()?;
                }
                Some(Tok::Slash) => {
                    self.next();
                    acc = &acc / &self.unary()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    // unary := '-' unary | power
    fn unary(&mut self) -> Result<ScalarField> {
        if let Some(Tok::Minus) = self.peek() {
            self.next();
            return Ok(-&self.unary()?);
        }
        self.power()
    }

    // power := atom ('^' integer)?
    fn power(&mut self) -> Result<ScalarField> {
        let base = self.atom()?;
        if let Some(Tok::Caret) = self.peek() {
            self.next();
            let neg = if let Some(Tok::Minus) = self.peek() {
                self.next();
                true
            } else {
                false
            };
            match self.next() {
                Some(Tok::Num(v)) if v.fract() == 0.0 => {
                    let n = v as i32;
                    Ok(base.powi(if neg { -n } else { n }))
                }
                got => Err(GeoError::Invalid(format!("expected integer exponent, got {got:?}"))),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<ScalarField> {
        match self.next() {
            Some(Tok::Num(v)) => Ok(ScalarField::constant(v)),
            Some(Tok::Coord(i)) => {
                if i >= self.dim {
                    return Err(GeoError::Invalid(format!(
                        "coordinate x{} exceeds chart dimension {}",
                        i + 1,
                        self.dim
                    )));
                }
                Ok(ScalarField::coord(i))
            }
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.expect(Tok::LParen)?;
                let arg = self.expr()?;
                self.expect(Tok::RParen)?;
                match name.as_str() {
                    "sin" => Ok(arg.sin()),
                    "cos" => Ok(arg.cos()),
                    _ => Err(GeoError::Invalid(format!("unknown function '{name}'"))),
                }
            }
            got => Err(GeoError::Invalid(format!("unexpected token {got:?}"))),
        }
    }
}

/// Parse one coefficient expression in coordinates x1..x{dim}.
pub fn parse_expr(src: &str, dim: usize) -> Result<ScalarField> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, dim };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(GeoError::Invalid(format!("trailing input in '{src}'")));
    }
    Ok(e)
}
