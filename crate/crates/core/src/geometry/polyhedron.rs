use std::collections::BTreeMap;

use crate::geometry::constraint::{AffineExpr, Coeffs, LinearConstraint, Relation};
use crate::geometry::lp::{lp_feasible, optimize_closure, LpProblem, LpStatus, Objective};
use crate::rational::Rational;

/// Default cap on rows produced by a single projection.
pub const DEFAULT_ROW_BUDGET: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("projection exceeded the row budget ({rows} > {budget})")]
pub struct BudgetExceeded {
    pub rows: usize,
    pub budget: usize,
}

/// Conjunction of linear constraints. No constraints means ⊤; `bottom` is ⊥.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Polyhedron {
    pub constraints: Vec<LinearConstraint>,
    bottom: bool,
}

impl Polyhedron {
    pub fn top() -> Self {
        Polyhedron::default()
    }

    pub fn bottom() -> Self {
        Polyhedron { constraints: Vec::new(), bottom: true }
    }

    /// Trivially-true rows are dropped; a trivially-false row yields ⊥.
    pub fn new(constraints: impl IntoIterator<Item = LinearConstraint>) -> Self {
        let mut out = Vec::new();
        for c in constraints {
            match c.trivial_truth() {
                Some(true) => {}
                Some(false) => return Polyhedron::bottom(),
                None => out.push(c),
            }
        }
        Polyhedron { constraints: out, bottom: false }
    }

    /// The single point `x = point`.
    pub fn point(point: &[Rational]) -> Self {
        Polyhedron::new(
            point
                .iter()
                .enumerate()
                .map(|(v, x)| LinearConstraint::bound(v, Relation::Eq, x.clone())),
        )
    }

    pub fn is_top(&self) -> bool {
        !self.bottom && self.constraints.is_empty()
    }

    pub fn is_bottom_marker(&self) -> bool {
        self.bottom
    }

    pub fn intersect(&self, other: &Polyhedron) -> Polyhedron {
        if self.bottom || other.bottom {
            return Polyhedron::bottom();
        }
        let mut cs = self.constraints.clone();
        cs.extend(other.constraints.iter().cloned());
        Polyhedron { constraints: cs, bottom: false }
    }

    pub fn with(&self, c: LinearConstraint) -> Polyhedron {
        self.intersect(&Polyhedron::new([c]))
    }

    pub fn contains(&self, point: &[Rational]) -> bool {
        !self.bottom && self.constraints.iter().all(|c| c.holds(point))
    }

    fn dim_hint(&self) -> usize {
        self.constraints.iter().filter_map(|c| c.max_var()).max().map_or(0, |v| v + 1)
    }

    /// An exact point of the polyhedron, if any.
    pub fn sample(&self, dim: usize) -> Option<Vec<Rational>> {
        if self.bottom {
            return None;
        }
        let n = dim.max(self.dim_hint());
        let out = lp_feasible(&LpProblem::with_constraints(n, self.constraints.clone()));
        match out.status {
            LpStatus::Feasible(mut w) => {
                if dim > 0 {
                    w.truncate(dim);
                }
                Some(w)
            }
            _ => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.sample(0).is_none()
    }

    /// Bounded iff every coordinate has finite max and min over the closure.
    /// Empty sets count as bounded.
    pub fn is_bounded(&self, dim: usize) -> bool {
        if self.is_empty() {
            return true;
        }
        for v in 0..dim {
            for obj in [
                Objective::maximize([(v, Rational::one())].into_iter().collect()),
                Objective::minimize([(v, Rational::one())].into_iter().collect()),
            ] {
                if let Some(None) = optimize_closure(dim.max(self.dim_hint()), &self.constraints, obj) {
                    return false;
                }
            }
        }
        true
    }

    /// Syntactic openness: every row strict.
    pub fn is_open(&self) -> bool {
        !self.bottom && self.constraints.iter().all(|c| c.is_strict())
    }

    /// Canonical constraint list: normalized rows, sorted, deduplicated.
    pub fn normalized(&self) -> Polyhedron {
        if self.bottom {
            return Polyhedron::bottom();
        }
        let mut cs: Vec<_> = self.constraints.iter().map(|c| c.normalized()).collect();
        cs.sort_by(|a, b| constraint_key(a).cmp(&constraint_key(b)));
        cs.dedup();
        Polyhedron::new(cs)
    }

    /// Syntactic equality after normalization.
    pub fn same_as(&self, other: &Polyhedron) -> bool {
        self.normalized() == other.normalized()
    }

    pub fn substitute(&self, v: usize, expr: &AffineExpr) -> Polyhedron {
        if self.bottom {
            return Polyhedron::bottom();
        }
        Polyhedron::new(self.constraints.iter().map(|c| c.substitute(v, expr)))
    }

    /// Image under `x_v := c`.
    pub fn assign_constant(&self, v: usize, c: &Rational) -> Result<Polyhedron, BudgetExceeded> {
        let p = project_with_budget(self, v, DEFAULT_ROW_BUDGET)?;
        Ok(p.with(LinearConstraint::bound(v, Relation::Eq, c.clone())))
    }

    /// Image under `x_v := x_v + c`.
    pub fn shift(&self, v: usize, c: &Rational) -> Polyhedron {
        let mut e = AffineExpr::var(v);
        e.constant = -c;
        self.substitute(v, &e)
    }

    /// Drops duplicate directions, keeping the tightest bound of each.
    pub fn simplified(&self) -> Polyhedron {
        if self.bottom {
            return Polyhedron::bottom();
        }
        match prune(self.constraints.clone()) {
            Some(rows) => Polyhedron::new(rows),
            None => Polyhedron::bottom(),
        }
    }

    /// Removes inequality rows implied by the others (one LP per row).
    pub fn without_redundant(&self, dim: usize) -> Polyhedron {
        let p = self.simplified();
        if p.bottom {
            return p;
        }
        let n = dim.max(p.dim_hint());
        let mut keep: Vec<LinearConstraint> = p.constraints.clone();
        let mut i = 0;
        while i < keep.len() {
            if keep[i].rel == Relation::Eq {
                i += 1;
                continue;
            }
            let mut rows: Vec<LinearConstraint> =
                keep.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, c)| c.clone()).collect();
            let c = &keep[i];
            let negated = match c.rel {
                Relation::Lt => Relation::Ge,
                Relation::Le => Relation::Gt,
                Relation::Gt => Relation::Le,
                Relation::Ge => Relation::Lt,
                Relation::Eq => unreachable!(),
            };
            rows.push(LinearConstraint { coeffs: c.coeffs.clone(), rel: negated, rhs: c.rhs.clone() });
            if lp_feasible(&LpProblem::with_constraints(n, rows)).is_feasible() {
                i += 1;
            } else {
                keep.remove(i);
            }
        }
        Polyhedron::new(keep)
    }

    pub fn display_with(&self, names: &[String]) -> String {
        if self.bottom {
            return "false".into();
        }
        if self.constraints.is_empty() {
            return "true".into();
        }
        self.constraints.iter().map(|c| c.display_with(names)).collect::<Vec<_>>().join(" && ")
    }
}

fn constraint_key(c: &LinearConstraint) -> (Vec<(usize, Rational)>, Relation, Rational) {
    (c.coeffs.iter().map(|(v, k)| (*v, k.clone())).collect(), c.rel, c.rhs.clone())
}

/// Keeps only the tightest inequality per coefficient vector.
fn prune(rows: Vec<LinearConstraint>) -> Option<Vec<LinearConstraint>> {
    let mut eqs: Vec<LinearConstraint> = Vec::new();
    let mut best: BTreeMap<Vec<(usize, Rational)>, (Rational, bool)> = BTreeMap::new();
    for r in rows {
        match r.trivial_truth() {
            Some(true) => continue,
            Some(false) => return None,
            None => {}
        }
        let n = r.normalized();
        if n.rel == Relation::Eq {
            if !eqs.contains(&n) {
                eqs.push(n);
            }
            continue;
        }
        let key: Vec<_> = n.coeffs.iter().map(|(v, k)| (*v, k.clone())).collect();
        let strict = n.rel == Relation::Lt;
        match best.get_mut(&key) {
            Some((rhs, s)) => {
                if n.rhs < *rhs || (n.rhs == *rhs && strict) {
                    *rhs = n.rhs;
                    *s = strict;
                }
            }
            None => {
                best.insert(key, (n.rhs, strict));
            }
        }
    }
    let mut out = eqs;
    for (key, (rhs, strict)) in best {
        out.push(LinearConstraint::new(key, if strict { Relation::Lt } else { Relation::Le }, rhs));
    }
    Some(out)
}

/// Fourier–Motzkin elimination of `v`, capped at `budget` rows.
pub fn project_with_budget(p: &Polyhedron, v: usize, budget: usize) -> Result<Polyhedron, BudgetExceeded> {
    if p.bottom {
        return Ok(Polyhedron::bottom());
    }
    let rows: Vec<LinearConstraint> = p.constraints.iter().map(|c| c.normalized()).collect();

    // An equality mentioning v: solve and substitute.
    if let Some(idx) = rows.iter().position(|c| c.rel == Relation::Eq && c.coeffs.contains_key(&v)) {
        let eq = &rows[idx];
        let a = eq.coeff(v);
        let mut expr = AffineExpr::constant(&eq.rhs / &a);
        for (w, c) in &eq.coeffs {
            if *w != v {
                expr.add_term(*w, &-(c / &a));
            }
        }
        let rest: Vec<_> = rows
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != idx)
            .map(|(_, c)| c.substitute(v, &expr))
            .collect();
        return Ok(match prune(rest) {
            Some(r) => Polyhedron::new(r),
            None => Polyhedron::bottom(),
        });
    }

    let mut upper = Vec::new();
    let mut lower = Vec::new();
    let mut keep = Vec::new();
    for c in rows {
        let a = c.coeff(v);
        if a.is_zero() {
            keep.push(c);
        } else if a.is_positive() {
            upper.push(c);
        } else {
            lower.push(c);
        }
    }
    let total = keep.len() + upper.len() * lower.len();
    if total > budget {
        return Err(BudgetExceeded { rows: total, budget });
    }
    for u in &upper {
        let au = u.coeff(v);
        for l in &lower {
            let al = -l.coeff(v);
            // al·u + au·l eliminates v.
            let mut coeffs: Coeffs = Coeffs::new();
            for (w, c) in &u.coeffs {
                *coeffs.entry(*w).or_insert_with(Rational::zero) += &(c * &al);
            }
            for (w, c) in &l.coeffs {
                *coeffs.entry(*w).or_insert_with(Rational::zero) += &(c * &au);
            }
            coeffs.remove(&v);
            let strict = u.is_strict() || l.is_strict();
            let rhs = &(&u.rhs * &al) + &(&l.rhs * &au);
            keep.push(LinearConstraint::new(coeffs, if strict { Relation::Lt } else { Relation::Le }, rhs));
        }
    }
    Ok(match prune(keep) {
        Some(r) => Polyhedron::new(r),
        None => Polyhedron::bottom(),
    })
}

/// Exact projection eliminating `v`.
pub fn project(p: &Polyhedron, v: usize) -> Polyhedron {
    project_with_budget(p, v, usize::MAX).expect("unbounded budget")
}

/// `{ν + rate·t : ν ∈ P ∩ inv, t >= 0} ∩ inv` with budgeted projection.
pub fn time_elapse_with_budget(
    p: &Polyhedron,
    rate: &[Rational],
    inv: &Polyhedron,
    budget: usize,
) -> Result<Polyhedron, BudgetExceeded> {
    let start = p.intersect(inv);
    if start.bottom || rate.iter().all(|r| r.is_zero()) {
        return Ok(start);
    }
    let t = rate.len();
    // Point y = ν + rate·t, so ν = y - rate·t must satisfy `start`.
    let mut cs: Vec<LinearConstraint> = start
        .constraints
        .iter()
        .map(|c| {
            let mut coeffs = c.coeffs.clone();
            let shift: Rational = c.coeffs.iter().map(|(v, a)| a * &rate[*v]).sum();
            if !shift.is_zero() {
                coeffs.insert(t, -shift);
            }
            LinearConstraint::new(coeffs, c.rel, c.rhs.clone())
        })
        .collect();
    cs.push(LinearConstraint::bound(t, Relation::Ge, Rational::zero()));
    let cone = project_with_budget(&Polyhedron::new(cs), t, budget)?;
    Ok(cone.intersect(inv))
}

pub fn time_elapse(p: &Polyhedron, rate: &[Rational], inv: &Polyhedron) -> Polyhedron {
    time_elapse_with_budget(p, rate, inv, usize::MAX).expect("unbounded budget")
}
