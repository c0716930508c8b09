//! LTL syntax tree and parser.

use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LtlFormula {
    True,
    False,
    Prop(String),
    Not(Box<LtlFormula>),
    And(Box<LtlFormula>, Box<LtlFormula>),
    Or(Box<LtlFormula>, Box<LtlFormula>),
    Implies(Box<LtlFormula>, Box<LtlFormula>),
    Next(Box<LtlFormula>),
    Eventually(Box<LtlFormula>),
    Always(Box<LtlFormula>),
    Until(Box<LtlFormula>, Box<LtlFormula>),
}

use LtlFormula as F;

impl LtlFormula {
    pub fn prop(p: &str) -> Self {
        F::Prop(p.to_string())
    }
    pub fn not(a: Self) -> Self {
        F::Not(Box::new(a))
    }
    pub fn and(a: Self, b: Self) -> Self {
        F::And(Box::new(a), Box::new(b))
    }
    pub fn or(a: Self, b: Self) -> Self {
        F::Or(Box::new(a), Box::new(b))
    }
    pub fn implies(a: Self, b: Self) -> Self {
        F::Implies(Box::new(a), Box::new(b))
    }
    pub fn next(a: Self) -> Self {
        F::Next(Box::new(a))
    }
    pub fn eventually(a: Self) -> Self {
        F::Eventually(Box::new(a))
    }
    pub fn always(a: Self) -> Self {
        F::Always(Box::new(a))
    }
    pub fn until(a: Self, b: Self) -> Self {
        F::Until(Box::new(a), Box::new(b))
    }

    /// Number of syntax tree nodes.
    pub fn size(&self) -> usize {
        match self {
            F::True | F::False | F::Prop(_) => 1,
            F::Not(a) | F::Next(a) | F::Eventually(a) | F::Always(a) => 1 + a.size(),
            F::And(a, b) | F::Or(a, b) | F::Implies(a, b) | F::Until(a, b) => 1 + a.size() + b.size(),
        }
    }

    pub fn propositions(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_props(&mut out);
        out
    }

    fn collect_props(&self, out: &mut BTreeSet<String>) {
        match self {
            F::True | F::False => {}
            F::Prop(p) => {
                out.insert(p.clone());
            }
            F::Not(a) | F::Next(a) | F::Eventually(a) | F::Always(a) => a.collect_props(out),
            F::And(a, b) | F::Or(a, b) | F::Implies(a, b) | F::Until(a, b) => {
                a.collect_props(out);
                b.collect_props(out);
            }
        }
    }
}

impl fmt::Display for LtlFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            F::True => write!(f, "true"),
            F::False => write!(f, "false"),
            F::Prop(p) => write!(f, "{p}"),
            F::Not(a) => write!(f, "!{}", Atom(a)),
            F::Next(a) => write!(f, "X {}", Atom(a)),
            F::Eventually(a) => write!(f, "F {}", Atom(a)),
            F::Always(a) => write!(f, "G {}", Atom(a)),
            F::And(a, b) => write!(f, "{} & {}", Atom(a), Atom(b)),
            F::Or(a, b) => write!(f, "{} | {}", Atom(a), Atom(b)),
            F::Implies(a, b) => write!(f, "{} -> {}", Atom(a), Atom(b)),
            F::Until(a, b) => write!(f, "{} U {}", Atom(a), Atom(b)),
        }
    }
}

/// Prints binary subterms in parentheses so output always reparses exactly.
struct Atom<'a>(&'a LtlFormula);

impl fmt::Display for Atom<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            F::And(..) | F::Or(..) | F::Implies(..) | F::Until(..) => write!(f, "({})", self.0),
            other => write!(f, "{other}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("syntax error at position {position}: {message}")]
pub struct SyntaxError {
    pub position: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Bang,
    And,
    Or,
    Arrow,
    LParen,
    RParen,
    End,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, SyntaxError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'!' => Tok::Bang,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'&' => {
                if bytes.get(i + 1) == Some(&b'&') {
                    i += 1;
                }
                Tok::And
            }
            b'|' => {
                if bytes.get(i + 1) == Some(&b'|') {
                    i += 1;
                }
                Tok::Or
            }
            b'-' if bytes.get(i + 1) == Some(&b'>') => {
                i += 1;
                Tok::Arrow
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i + 1 < bytes.len() && (bytes[i + 1].is_ascii_alphanumeric() || bytes[i + 1] == b'_') {
                    i += 1;
                }
                Tok::Ident(text[start..=i].to_string())
            }
            _ => {
                return Err(SyntaxError { position: start, message: format!("unexpected character '{}'", text[start..].chars().next().unwrap()) })
            }
        };
        out.push((start, tok));
        i += 1;
    }
    out.push((text.len(), Tok::End));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].1
    }

    fn pos(&self) -> usize {
        self.toks[self.at].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].1.clone();
        if t != Tok::End {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, message: &str) -> Result<T, SyntaxError> {
        Err(SyntaxError { position: self.pos(), message: message.to_string() })
    }

    fn is_keyword(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == k)
    }

    fn implication(&mut self) -> Result<LtlFormula, SyntaxError> {
        let lhs = self.disjunction()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            return Ok(F::implies(lhs, self.implication()?));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<LtlFormula, SyntaxError> {
        let mut lhs = self.conjunction()?;
        while *self.peek() == Tok::Or {
            self.bump();
            lhs = F::or(lhs, self.conjunction()?);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<LtlFormula, SyntaxError> {
        let mut lhs = self.until()?;
        while *self.peek() == Tok::And {
            self.bump();
            lhs = F::and(lhs, self.until()?);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<LtlFormula, SyntaxError> {
        let lhs = self.unary()?;
        if self.is_keyword("U") {
            self.bump();
            return Ok(F::until(lhs, self.until()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<LtlFormula, SyntaxError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Bang => Ok(F::not(self.unary()?)),
            Tok::LParen => {
                let inner = self.implication()?;
                if *self.peek() != Tok::RParen {
                    return self.error("expected ')'");
                }
                self.bump();
                Ok(inner)
            }
            Tok::Ident(s) => match s.as_str() {
                "X" => Ok(F::next(self.unary()?)),
                "F" => Ok(F::eventually(self.unary()?)),
                "G" => Ok(F::always(self.unary()?)),
                "true" => Ok(F::True),
                "false" => Ok(F::False),
                "U" => Err(SyntaxError { position: pos, message: "'U' needs a left operand".into() }),
                _ => Ok(F::Prop(s)),
            },
            Tok::End => Err(SyntaxError { position: pos, message: "unexpected end of input".into() }),
            _ => Err(SyntaxError { position: pos, message: "expected a formula".into() }),
        }
    }
}

/// Parses `!`, `X`, `F`, `G` (tightest), then right-associative `U`, then
/// `&`, `|` and right-associative `->`. `&&` and `||` are accepted too.
pub fn parse_ltl(text: &str) -> Result<LtlFormula, SyntaxError> {
    let mut p = Parser { toks: lex(text)?, at: 0 };
    let f = p.implication()?;
    if *p.peek() != Tok::End {
        return p.error("unexpected trailing input");
    }
    Ok(f)
}
