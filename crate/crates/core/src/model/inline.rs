//! Inline syntax for valuations (`x=1/2,y=0`) and constraint lists
//! (`2*x - y <= 3, y > 0`).

use std::collections::BTreeMap;

use crate::geometry::{LinearConstraint, Polyhedron, Relation};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("at column {pos}: {message}")]
pub struct InlineError {
    pub pos: usize,
    pub message: String,
}

fn err<T>(pos: usize, message: impl Into<String>) -> Result<T, InlineError> {
    Err(InlineError { pos, message: message.into() })
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Rel(Relation),
    Sep,
}

fn lex(s: &str) -> Result<Vec<(usize, Tok)>, InlineError> {
    let b = s.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i] as char;
        let start = i;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            while i < b.len() && ((b[i] as char).is_ascii_digit() || b[i] == b'.') {
                i += 1;
            }
            if i + 1 < b.len() && b[i] == b'/' && (b[i + 1] as char).is_ascii_digit() {
                i += 1;
                while i < b.len() && (b[i] as char).is_ascii_digit() {
                    i += 1;
                }
            }
            let lit = &s[start..i];
            let v: Rational = lit.parse().map_err(|_| InlineError { pos: start, message: format!("bad number {lit}") })?;
            out.push((start, Tok::Num(v)));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            while i < b.len() && ((b[i] as char).is_alphanumeric() || b[i] == b'_' || b[i] == b'\'') {
                i += 1;
            }
            out.push((start, Tok::Ident(s[start..i].to_string())));
            continue;
        }
        let two = if i + 1 < b.len() { &s[i..i + 2] } else { "" };
        let (tok, len) = match (c, two) {
            (_, "<=") => (Tok::Rel(Relation::Le), 2),
            (_, ">=") => (Tok::Rel(Relation::Ge), 2),
            (_, "==") => (Tok::Rel(Relation::Eq), 2),
            (_, "&&") => (Tok::Sep, 2),
            ('<', _) => (Tok::Rel(Relation::Lt), 1),
            ('>', _) => (Tok::Rel(Relation::Gt), 1),
            ('=', _) => (Tok::Rel(Relation::Eq), 1),
            ('+', _) => (Tok::Plus, 1),
            ('-', _) => (Tok::Minus, 1),
            ('*', _) => (Tok::Star, 1),
            (',', _) | ('&', _) => (Tok::Sep, 1),
            _ => return err(start, format!("unexpected character {c:?}")),
        };
        out.push((start, tok));
        i += len;
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    vars: &'a [String],
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    /// Linear expression as (coefficients, constant).
    fn expr(&mut self) -> Result<(BTreeMap<usize, Rational>, Rational), InlineError> {
        let mut coeffs = BTreeMap::new();
        let mut constant = Rational::zero();
        let mut first = true;
        loop {
            let mut sign = Rational::one();
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    sign = -sign;
                }
                _ if first => {}
                _ => break,
            }
            first = false;
            let col = self.col();
            let (k, v) = match self.peek().cloned() {
                Some(Tok::Num(n)) => {
                    self.pos += 1;
                    if self.peek() == Some(&Tok::Star) {
                        self.pos += 1;
                    }
                    match self.peek().cloned() {
                        Some(Tok::Ident(name)) => {
                            self.pos += 1;
                            (n, Some(name))
                        }
                        _ => (n, None),
                    }
                }
                Some(Tok::Ident(name)) => {
                    self.pos += 1;
                    (Rational::one(), Some(name))
                }
                _ => return err(col, "expected a term"),
            };
            let k = &k * &sign;
            match v {
                Some(name) => {
                    let Some(idx) = self.vars.iter().position(|x| *x == name) else {
                        return err(col, format!("unknown variable {name}"));
                    };
                    *coeffs.entry(idx).or_insert_with(Rational::zero) += &k;
                }
                None => constant += &k,
            }
        }
        Ok((coeffs, constant))
    }

    fn constraint(&mut self) -> Result<LinearConstraint, InlineError> {
        let (lc, lk) = self.expr()?;
        let col = self.col();
        let Some(Tok::Rel(rel)) = self.peek().cloned() else {
            return err(col, "expected a relation");
        };
        self.pos += 1;
        let (rc, rk) = self.expr()?;
        let mut coeffs = lc;
        for (v, c) in rc {
            *coeffs.entry(v).or_insert_with(Rational::zero) -= &c;
        }
        Ok(LinearConstraint::new(coeffs, rel, &rk - &lk))
    }
}

/// Parses a separator-delimited list of linear constraints. The empty string is ⊤.
pub fn parse_constraints(text: &str, vars: &[String]) -> Result<Polyhedron, InlineError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, vars, end: text.len() };
    let mut out = Vec::new();
    if matches!(text.trim(), "" | "true") {
        return Ok(Polyhedron::top());
    }
    loop {
        out.push(p.constraint()?);
        match p.peek() {
            None => break,
            Some(Tok::Sep) => p.pos += 1,
            Some(_) => return err(p.col(), "expected ',' or end of input"),
        }
    }
    Ok(Polyhedron::new(out))
}

/// Parses `x=1/2,y=0`; every variable must be assigned exactly once.
pub fn parse_valuation(text: &str, vars: &[String]) -> Result<Vec<Rational>, InlineError> {
    let mut out: Vec<Option<Rational>> = vec![None; vars.len()];
    for part in text.split(',').filter(|s| !s.trim().is_empty()) {
        let Some((name, value)) = part.split_once('=') else {
            return err(0, format!("expected name=value in {part:?}"));
        };
        let name = name.trim();
        let Some(idx) = vars.iter().position(|v| v == name) else {
            return err(0, format!("unknown variable {name}"));
        };
        let v: Rational =
            value.trim().parse().map_err(|_| InlineError { pos: 0, message: format!("bad number {value:?}") })?;
        if out[idx].replace(v).is_some() {
            return err(0, format!("variable {name} assigned twice"));
        }
    }
    out.into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| InlineError { pos: 0, message: format!("missing value for {}", vars[i]) }))
        .collect()
}
