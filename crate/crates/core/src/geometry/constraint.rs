use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::rational::Rational;

/// Comparison operator of a linear constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
}

impl Relation {
    pub fn is_strict(self) -> bool {
        matches!(self, Relation::Lt | Relation::Gt)
    }

    /// The relation obtained by multiplying both sides by -1.
    pub fn flipped(self) -> Relation {
        match self {
            Relation::Lt => Relation::Gt,
            Relation::Le => Relation::Ge,
            Relation::Eq => Relation::Eq,
            Relation::Ge => Relation::Le,
            Relation::Gt => Relation::Lt,
        }
    }

    pub fn closure(self) -> Relation {
        match self {
            Relation::Lt => Relation::Le,
            Relation::Gt => Relation::Ge,
            r => r,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Lt => "<",
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
            Relation::Gt => ">",
        }
    }

    pub fn parse(s: &str) -> Option<Relation> {
        Some(match s {
            "<" => Relation::Lt,
            "<=" => Relation::Le,
            "=" | "==" => Relation::Eq,
            ">=" => Relation::Ge,
            ">" => Relation::Gt,
            _ => return None,
        })
    }

    pub fn holds(self, lhs: &Rational, rhs: &Rational) -> bool {
        match self {
            Relation::Lt => lhs < rhs,
            Relation::Le => lhs <= rhs,
            Relation::Eq => lhs == rhs,
            Relation::Ge => lhs >= rhs,
            Relation::Gt => lhs > rhs,
        }
    }
}

/// Sparse coefficient vector indexed by variable position.
pub type Coeffs = BTreeMap<usize, Rational>;

fn add_scaled(into: &mut Coeffs, from: &Coeffs, scale: &Rational) {
    if scale.is_zero() {
        return;
    }
    for (v, c) in from {
        let e = into.entry(*v).or_insert_with(Rational::zero);
        *e += &(c * scale);
        if e.is_zero() {
            into.remove(v);
        }
    }
}

/// Affine expression `Σ coeffs[v]·x_v + constant`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct AffineExpr {
    pub coeffs: Coeffs,
    pub constant: Rational,
}

impl AffineExpr {
    pub fn constant(c: Rational) -> Self {
        AffineExpr { coeffs: Coeffs::new(), constant: c }
    }

    pub fn var(v: usize) -> Self {
        let mut coeffs = Coeffs::new();
        coeffs.insert(v, Rational::one());
        AffineExpr { coeffs, constant: Rational::zero() }
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add_term(&mut self, v: usize, c: &Rational) {
        let mut one = Coeffs::new();
        one.insert(v, Rational::one());
        add_scaled(&mut self.coeffs, &one, c);
    }

    pub fn add_scaled(&mut self, other: &AffineExpr, scale: &Rational) {
        add_scaled(&mut self.coeffs, &other.coeffs, scale);
        self.constant += &(&other.constant * scale);
    }

    pub fn eval(&self, point: &[Rational]) -> Rational {
        let mut s = self.constant.clone();
        for (v, c) in &self.coeffs {
            s += &(c * &point[*v]);
        }
        s
    }
}

/// `Σ coeffs[v]·x_v  rel  rhs`. Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LinearConstraint {
    pub coeffs: Coeffs,
    pub rel: Relation,
    pub rhs: Rational,
}

impl LinearConstraint {
    pub fn new(coeffs: impl IntoIterator<Item = (usize, Rational)>, rel: Relation, rhs: Rational) -> Self {
        let mut map = Coeffs::new();
        for (v, c) in coeffs {
            let e = map.entry(v).or_insert_with(Rational::zero);
            *e += &c;
        }
        map.retain(|_, c| !c.is_zero());
        LinearConstraint { coeffs: map, rel, rhs }
    }

    /// `x_v rel c`
    pub fn bound(v: usize, rel: Relation, c: Rational) -> Self {
        Self::new([(v, Rational::one())], rel, c)
    }

    /// `expr rel 0` rewritten with the constant moved to the right.
    pub fn from_affine(expr: &AffineExpr, rel: Relation, rhs: &Rational) -> Self {
        LinearConstraint {
            coeffs: expr.coeffs.clone(),
            rel,
            rhs: rhs - &expr.constant,
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Truth value of a constraint without variables.
    pub fn trivial_truth(&self) -> Option<bool> {
        if self.is_trivial() {
            Some(self.rel.holds(&Rational::zero(), &self.rhs))
        } else {
            None
        }
    }

    pub fn max_var(&self) -> Option<usize> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn lhs(&self, point: &[Rational]) -> Rational {
        let mut s = Rational::zero();
        for (v, c) in &self.coeffs {
            s += &(c * &point[*v]);
        }
        s
    }

    pub fn holds(&self, point: &[Rational]) -> bool {
        self.rel.holds(&self.lhs(point), &self.rhs)
    }

    pub fn is_strict(&self) -> bool {
        self.rel.is_strict()
    }

    pub fn coeff(&self, v: usize) -> Rational {
        self.coeffs.get(&v).cloned().unwrap_or_default()
    }

    pub fn scaled(&self, k: &Rational) -> LinearConstraint {
        assert!(!k.is_zero());
        LinearConstraint {
            coeffs: self.coeffs.iter().map(|(v, c)| (*v, c * k)).collect(),
            rel: if k.is_negative() { self.rel.flipped() } else { self.rel },
            rhs: &self.rhs * k,
        }
    }

    pub fn closure(&self) -> LinearConstraint {
        LinearConstraint { rel: self.rel.closure(), ..self.clone() }
    }

    /// Canonical form: relation in {<, <=, =}, leading coefficient of
    /// magnitude one (exactly one for equalities). Trivial constraints are
    /// rewritten to `0 < 1` / `0 < 0`-style literals with rhs in {-1, 0, 1}.
    pub fn normalized(&self) -> LinearConstraint {
        if self.is_trivial() {
            let truth = self.trivial_truth().unwrap();
            return LinearConstraint {
                coeffs: Coeffs::new(),
                rel: Relation::Le,
                rhs: if truth { Rational::zero() } else { -Rational::one() },
            };
        }
        let mut c = match self.rel {
            Relation::Ge | Relation::Gt => self.scaled(&-Rational::one()),
            _ => self.clone(),
        };
        let lead = c.coeffs.values().next().unwrap().clone();
        let k = if c.rel == Relation::Eq { lead.recip() } else { lead.abs().recip() };
        c = c.scaled(&k);
        c
    }

    /// Replaces `x_v` by `expr` (an affine expression not mentioning `x_v`).
    pub fn substitute(&self, v: usize, expr: &AffineExpr) -> LinearConstraint {
        let Some(a) = self.coeffs.get(&v).cloned() else {
            return self.clone();
        };
        let mut coeffs = self.coeffs.clone();
        coeffs.remove(&v);
        add_scaled(&mut coeffs, &expr.coeffs, &a);
        LinearConstraint {
            coeffs,
            rel: self.rel,
            rhs: &self.rhs - &(&a * &expr.constant),
        }
    }

    /// Rewrites every variable `v` through `map(v)`.
    pub fn remap(&self, map: impl Fn(usize) -> usize) -> LinearConstraint {
        LinearConstraint::new(self.coeffs.iter().map(|(v, c)| (map(*v), c.clone())), self.rel, self.rhs.clone())
    }

    /// Substitutes an affine expression for every variable.
    pub fn compose(&self, exprs: &[AffineExpr]) -> LinearConstraint {
        let mut acc = AffineExpr::default();
        for (v, c) in &self.coeffs {
            acc.add_scaled(&exprs[*v], c);
        }
        LinearConstraint::from_affine(&acc, self.rel, &self.rhs)
    }

    pub fn display_with(&self, names: &[String]) -> String {
        if self.is_trivial() {
            return format!("0 {} {}", self.rel.symbol(), self.rhs);
        }
        let mut s = String::new();
        for (i, (v, c)) in self.coeffs.iter().enumerate() {
            let name = names.get(*v).cloned().unwrap_or_else(|| format!("v{v}"));
            let neg = c.is_negative();
            let mag = c.abs();
            if i == 0 {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            if mag != Rational::one() {
                s.push_str(&format!("{mag}*"));
            }
            s.push_str(&name);
        }
        format!("{s} {} {}", self.rel.symbol(), self.rhs)
    }
}

impl fmt::Display for LinearConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_with(&[]))
    }
}
