//! Exact rational linear programming.
//!
//! The solver is a bounded-variable simplex over a row tableau: every
//! constraint row gets a slack variable `s_r = a_r·x` carrying the row's
//! bounds, and the original variables are free. Feasibility is found with
//! the bound-repair loop used by SMT arithmetic solvers, optimization with a
//! primal bounded simplex. Both phases use Bland's smallest-index rule.
//!
//! Strict rows are handled by an auxiliary variable `eps`: each strict row
//! `a·x < b` becomes `a·x + eps <= b`, `0 <= eps <= 1` is added and `eps` is
//! maximised. The system is feasible iff the optimum is positive.

use std::collections::BTreeMap;

use crate::geometry::constraint::{Coeffs, LinearConstraint, Relation};
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Objective {
    pub coeffs: Coeffs,
    pub sense: Sense,
}

impl Objective {
    pub fn maximize(coeffs: Coeffs) -> Self {
        Objective { coeffs, sense: Sense::Maximize }
    }

    pub fn minimize(coeffs: Coeffs) -> Self {
        Objective { coeffs, sense: Sense::Minimize }
    }

    pub fn eval(&self, x: &[Rational]) -> Rational {
        self.coeffs.iter().map(|(v, c)| c * &x[*v]).sum()
    }
}

/// A linear program over `num_vars` free real variables.
#[derive(Debug, Clone, Default)]
pub struct LpProblem {
    pub num_vars: usize,
    pub constraints: Vec<LinearConstraint>,
    pub objective: Option<Objective>,
}

impl LpProblem {
    pub fn new(num_vars: usize) -> Self {
        LpProblem { num_vars, constraints: Vec::new(), objective: None }
    }

    pub fn with_constraints(num_vars: usize, constraints: Vec<LinearConstraint>) -> Self {
        LpProblem { num_vars, constraints, objective: None }
    }

    pub fn add(&mut self, c: LinearConstraint) {
        debug_assert!(c.max_var().map_or(true, |v| v < self.num_vars));
        self.constraints.push(c);
    }

    pub fn has_strict(&self) -> bool {
        self.constraints.iter().any(|c| c.is_strict())
    }
}

/// Nonnegative combination of rows proving infeasibility of a non-strict
/// system: `Σ λ_r a_r = 0` and `Σ λ_r b_r < 0`, with `λ_r >= 0` on `<=`
/// rows, `λ_r <= 0` on `>=` rows and unrestricted on `=` rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FarkasCertificate {
    pub multipliers: Vec<(usize, Rational)>,
}

impl FarkasCertificate {
    /// Independent check against the problem's rows.
    pub fn verify(&self, p: &LpProblem) -> bool {
        let mut combo: Coeffs = BTreeMap::new();
        let mut rhs = Rational::zero();
        for (r, lam) in &self.multipliers {
            let Some(row) = p.constraints.get(*r) else { return false };
            let sign_ok = match row.rel {
                Relation::Le | Relation::Lt => !lam.is_negative(),
                Relation::Ge | Relation::Gt => !lam.is_positive(),
                Relation::Eq => true,
            };
            if !sign_ok {
                return false;
            }
            for (v, c) in &row.coeffs {
                let e = combo.entry(*v).or_insert_with(Rational::zero);
                *e += &(c * lam);
            }
            rhs += &(&row.rhs * lam);
        }
        combo.values().all(|c| c.is_zero()) && rhs.is_negative()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpStatus {
    /// A point satisfying every row exactly, strict rows strictly.
    Feasible(Vec<Rational>),
    /// No point exists. A certificate accompanies non-strict systems.
    Infeasible(Option<FarkasCertificate>),
    /// The objective is unbounded: `point + λ·ray` is feasible for all `λ >= 0`.
    Unbounded { point: Vec<Rational>, ray: Vec<Rational> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpOutcome {
    pub status: LpStatus,
    /// Optimal value over the closure of the feasible set, when an
    /// objective was given and is bounded.
    pub optimum: Option<Rational>,
}

impl LpOutcome {
    pub fn is_feasible(&self) -> bool {
        !matches!(self.status, LpStatus::Infeasible(_))
    }

    pub fn witness(&self) -> Option<&[Rational]> {
        match &self.status {
            LpStatus::Feasible(w) => Some(w),
            LpStatus::Unbounded { point, .. } => Some(point),
            LpStatus::Infeasible(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pos {
    Basic(usize),
    Nonbasic(usize),
}

struct Tableau {
    n: usize,
    lower: Vec<Option<Rational>>,
    upper: Vec<Option<Rational>>,
    value: Vec<Rational>,
    basic: Vec<usize>,
    nonbasic: Vec<usize>,
    pos: Vec<Pos>,
    /// rows[i][c]: coefficient of nonbasic[c] in the definition of basic[i].
    rows: Vec<Vec<Rational>>,
}

enum CheckResult {
    Feasible,
    /// Row index, and whether the lower bound was violated.
    Conflict(usize, bool),
}

enum OptResult {
    Optimal,
    Unbounded(Vec<Rational>),
}

impl Tableau {
    /// `rows` are coefficient maps over `n` original variables.
    fn new(n: usize, rows: &[(Coeffs, Option<Rational>, Option<Rational>)]) -> Self {
        let m = rows.len();
        let mut lower = vec![None; n + m];
        let mut upper = vec![None; n + m];
        let mut dense = Vec::with_capacity(m);
        for (i, (coeffs, lo, hi)) in rows.iter().enumerate() {
            let mut r = vec![Rational::zero(); n];
            for (v, c) in coeffs {
                r[*v] = c.clone();
            }
            dense.push(r);
            lower[n + i] = lo.clone();
            upper[n + i] = hi.clone();
        }
        let mut pos = Vec::with_capacity(n + m);
        pos.extend((0..n).map(Pos::Nonbasic));
        pos.extend((0..m).map(Pos::Basic));
        Tableau {
            n,
            lower,
            upper,
            value: vec![Rational::zero(); n + m],
            basic: (n..n + m).collect(),
            nonbasic: (0..n).collect(),
            pos,
            rows: dense,
        }
    }

    fn below_lower(&self, v: usize) -> bool {
        self.lower[v].as_ref().is_some_and(|l| self.value[v] < *l)
    }

    fn above_upper(&self, v: usize) -> bool {
        self.upper[v].as_ref().is_some_and(|u| self.value[v] > *u)
    }

    fn can_increase(&self, v: usize) -> bool {
        self.upper[v].as_ref().map_or(true, |u| self.value[v] < *u)
    }

    fn can_decrease(&self, v: usize) -> bool {
        self.lower[v].as_ref().map_or(true, |l| self.value[v] > *l)
    }

    /// Moves nonbasic column `c` by `delta`, keeping basic values consistent.
    fn shift_nonbasic(&mut self, c: usize, delta: &Rational) {
        if delta.is_zero() {
            return;
        }
        let v = self.nonbasic[c];
        self.value[v] += delta;
        for (i, row) in self.rows.iter().enumerate() {
            if !row[c].is_zero() {
                let b = self.basic[i];
                self.value[b] += &(&row[c] * delta);
            }
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let a = self.rows[r][c].clone();
        debug_assert!(!a.is_zero());
        let inv = a.recip();
        let ncols = self.rows[r].len();
        let mut newrow = vec![Rational::zero(); ncols];
        for k in 0..ncols {
            if k == c {
                newrow[k] = inv.clone();
            } else if !self.rows[r][k].is_zero() {
                newrow[k] = -(&self.rows[r][k] * &inv);
            }
        }
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][c].is_zero() {
                continue;
            }
            let b = self.rows[i][c].clone();
            let row = &mut self.rows[i];
            for k in 0..ncols {
                if k == c {
                    row[k] = &b * &newrow[c];
                } else if !newrow[k].is_zero() {
                    row[k] += &(&b * &newrow[k]);
                }
            }
        }
        self.rows[r] = newrow;
        let leaving = self.basic[r];
        let entering = self.nonbasic[c];
        self.basic[r] = entering;
        self.nonbasic[c] = leaving;
        self.pos[entering] = Pos::Basic(r);
        self.pos[leaving] = Pos::Nonbasic(c);
    }

    /// Sets basic variable of row `r` to `target` by moving column `c`, then pivots.
    fn pivot_and_update(&mut self, r: usize, c: usize, target: Rational) {
        let b = self.basic[r];
        let theta = &(&target - &self.value[b]) / &self.rows[r][c];
        self.shift_nonbasic(c, &theta);
        self.value[b] = target;
        self.pivot(r, c);
    }

    fn check(&mut self) -> CheckResult {
        loop {
            let mut worst: Option<(usize, usize, bool)> = None;
            for (i, &b) in self.basic.iter().enumerate() {
                let lo = self.below_lower(b);
                if lo || self.above_upper(b) {
                    if worst.map_or(true, |(_, wb, _)| b < wb) {
                        worst = Some((i, b, lo));
                    }
                }
            }
            let Some((r, b, lo)) = worst else {
                return CheckResult::Feasible;
            };
            let mut entering: Option<(usize, usize)> = None;
            for (c, a) in self.rows[r].iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                let v = self.nonbasic[c];
                let ok = if lo == a.is_positive() { self.can_increase(v) } else { self.can_decrease(v) };
                if ok && entering.map_or(true, |(_, ev)| v < ev) {
                    entering = Some((c, v));
                }
            }
            let Some((c, _)) = entering else {
                return CheckResult::Conflict(r, lo);
            };
            let target = if lo { self.lower[b].clone().unwrap() } else { self.upper[b].clone().unwrap() };
            self.pivot_and_update(r, c, target);
        }
    }

    /// Maximizes `obj` (over original variables) from a feasible assignment.
    fn maximize(&mut self, obj: &[Rational]) -> OptResult {
        loop {
            let ncols = self.nonbasic.len();
            let mut reduced = vec![Rational::zero(); ncols];
            for (c, &v) in self.nonbasic.iter().enumerate() {
                if v < self.n {
                    reduced[c] = obj[v].clone();
                }
            }
            for (i, &b) in self.basic.iter().enumerate() {
                if b < self.n && !obj[b].is_zero() {
                    for c in 0..ncols {
                        if !self.rows[i][c].is_zero() {
                            reduced[c] += &(&obj[b] * &self.rows[i][c]);
                        }
                    }
                }
            }
            let mut entering: Option<(usize, usize, bool)> = None;
            for c in 0..ncols {
                let v = self.nonbasic[c];
                let up = reduced[c].is_positive();
                let ok = (up && self.can_increase(v)) || (reduced[c].is_negative() && self.can_decrease(v));
                if ok && entering.map_or(true, |(_, ev, _)| v < ev) {
                    entering = Some((c, v, up));
                }
            }
            let Some((c, v, up)) = entering else {
                return OptResult::Optimal;
            };
            // Ratio test; candidates are (theta, var index, row or own bound).
            let mut best: Option<(Rational, usize, Option<usize>)> = None;
            let mut consider = |theta: Rational, var: usize, row: Option<usize>| {
                let better = match &best {
                    None => true,
                    Some((t, bv, _)) => theta < *t || (theta == *t && var < *bv),
                };
                if better {
                    best = Some((theta, var, row));
                }
            };
            if up {
                if let Some(u) = &self.upper[v] {
                    consider(u - &self.value[v], v, None);
                }
            } else if let Some(l) = &self.lower[v] {
                consider(&self.value[v] - l, v, None);
            }
            for (i, row) in self.rows.iter().enumerate() {
                let a = &row[c];
                if a.is_zero() {
                    continue;
                }
                let b = self.basic[i];
                let rising = a.is_positive() == up;
                if rising {
                    if let Some(u) = &self.upper[b] {
                        consider(&(u - &self.value[b]) / &a.abs(), b, Some(i));
                    }
                } else if let Some(l) = &self.lower[b] {
                    consider(&(&self.value[b] - l) / &a.abs(), b, Some(i));
                }
            }
            match best {
                None => {
                    let mut ray = vec![Rational::zero(); self.n];
                    let dir = if up { Rational::one() } else { -Rational::one() };
                    if v < self.n {
                        ray[v] = dir.clone();
                    }
                    for (i, &b) in self.basic.iter().enumerate() {
                        if b < self.n {
                            ray[b] = &self.rows[i][c] * &dir;
                        }
                    }
                    return OptResult::Unbounded(ray);
                }
                Some((theta, _, None)) => {
                    let delta = if up { theta } else { -theta };
                    self.shift_nonbasic(c, &delta);
                }
                Some((theta, b, Some(r))) => {
                    let a = &self.rows[r][c];
                    let rising = a.is_positive() == up;
                    let target = if rising { self.upper[b].clone().unwrap() } else { self.lower[b].clone().unwrap() };
                    debug_assert!(theta >= Rational::zero());
                    self.pivot_and_update(r, c, target);
                }
            }
        }
    }

    fn point(&self) -> Vec<Rational> {
        self.value[..self.n].to_vec()
    }

    /// Farkas multipliers (per tableau row) from a conflict row, assuming
    /// all bounded nonbasic variables are slacks.
    fn farkas(&self, r: usize, lower_violated: bool) -> Option<Vec<(usize, Rational)>> {
        let n = self.n;
        let b = self.basic[r];
        if b < n {
            return None;
        }
        let sign = if lower_violated { Rational::one() } else { -Rational::one() };
        let mut out = vec![(b - n, -sign.clone())];
        for (c, a) in self.rows[r].iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let v = self.nonbasic[c];
            if v < n {
                return None;
            }
            out.push((v - n, a * &sign));
        }
        Some(out)
    }
}

fn row_bounds(rel: Relation, rhs: &Rational) -> (Option<Rational>, Option<Rational>) {
    match rel {
        Relation::Lt | Relation::Le => (None, Some(rhs.clone())),
        Relation::Gt | Relation::Ge => (Some(rhs.clone()), None),
        Relation::Eq => (Some(rhs.clone()), Some(rhs.clone())),
    }
}

fn trivial_certificate(idx: usize, c: &LinearConstraint) -> Option<FarkasCertificate> {
    if c.is_strict() {
        return None;
    }
    let lam = match c.rel {
        Relation::Le => Rational::one(),
        Relation::Ge => -Rational::one(),
        _ => {
            if c.rhs.is_negative() {
                Rational::one()
            } else {
                -Rational::one()
            }
        }
    };
    Some(FarkasCertificate { multipliers: vec![(idx, lam)] })
}

/// Feasibility (and optional optimization) of an exact rational LP.
pub fn lp_feasible(p: &LpProblem) -> LpOutcome {
    let infeasible = |cert| LpOutcome { status: LpStatus::Infeasible(cert), optimum: None };
    let mut live = Vec::new();
    for (i, c) in p.constraints.iter().enumerate() {
        match c.trivial_truth() {
            Some(true) => {}
            Some(false) => return infeasible(trivial_certificate(i, c)),
            None => live.push(i),
        }
    }

    let strict = live.iter().any(|&i| p.constraints[i].is_strict());
    let n = p.num_vars;

    let witness = if strict {
        let eps = n;
        let mut rows = Vec::with_capacity(live.len() + 1);
        for &i in &live {
            let c = &p.constraints[i];
            let mut coeffs = c.coeffs.clone();
            match c.rel {
                Relation::Lt => {
                    coeffs.insert(eps, Rational::one());
                }
                Relation::Gt => {
                    coeffs.insert(eps, -Rational::one());
                }
                _ => {}
            }
            let (lo, hi) = row_bounds(c.rel, &c.rhs);
            rows.push((coeffs, lo, hi));
        }
        let mut t = Tableau::new(n + 1, &rows);
        t.lower[eps] = Some(Rational::zero());
        t.upper[eps] = Some(Rational::one());
        if let CheckResult::Conflict(..) = t.check() {
            return infeasible(None);
        }
        let mut obj = vec![Rational::zero(); n + 1];
        obj[eps] = Rational::one();
        match t.maximize(&obj) {
            OptResult::Optimal => {}
            OptResult::Unbounded(_) => unreachable!("eps is bounded"),
        }
        if !t.value[eps].is_positive() {
            return infeasible(None);
        }
        let mut w = t.point();
        w.truncate(n);
        Some(w)
    } else {
        None
    };

    let closure_rows: Vec<_> = live
        .iter()
        .map(|&i| {
            let c = &p.constraints[i];
            let (lo, hi) = row_bounds(c.rel, &c.rhs);
            (c.coeffs.clone(), lo, hi)
        })
        .collect();

    let need_closure = p.objective.is_some() || witness.is_none();
    if !need_closure {
        let w = witness.unwrap();
        assert_witness(p, &w);
        return LpOutcome { status: LpStatus::Feasible(w), optimum: None };
    }

    let mut t = Tableau::new(n, &closure_rows);
    if let CheckResult::Conflict(r, lo) = t.check() {
        let cert = t.farkas(r, lo).map(|m| FarkasCertificate {
            multipliers: m.into_iter().map(|(row, lam)| (live[row], lam)).collect(),
        });
        debug_assert!(cert.as_ref().map_or(true, |c| c.verify(p)));
        return infeasible(cert);
    }
    let Some(objective) = &p.objective else {
        let w = t.point();
        assert_witness(p, &w);
        return LpOutcome { status: LpStatus::Feasible(w), optimum: None };
    };
    let mut obj = vec![Rational::zero(); n];
    for (v, c) in &objective.coeffs {
        obj[*v] = match objective.sense {
            Sense::Maximize => c.clone(),
            Sense::Minimize => -c,
        };
    }
    match t.maximize(&obj) {
        OptResult::Optimal => {
            let vertex = t.point();
            let opt = objective.eval(&vertex);
            let w = witness.unwrap_or(vertex);
            assert_witness(p, &w);
            LpOutcome { status: LpStatus::Feasible(w), optimum: Some(opt) }
        }
        OptResult::Unbounded(mut ray) => {
            ray.truncate(n);
            let w = witness.unwrap_or_else(|| t.point());
            assert_witness(p, &w);
            LpOutcome { status: LpStatus::Unbounded { point: w, ray }, optimum: None }
        }
    }
}

fn assert_witness(p: &LpProblem, w: &[Rational]) {
    for c in &p.constraints {
        assert!(c.holds(w), "LP witness violates {c}");
    }
}

/// Optimizes `objective` over the closure of the feasible set of `rows`.
/// Returns `None` if the closure is empty, `Some(None)` if unbounded.
pub fn optimize_closure(
    num_vars: usize,
    rows: &[LinearConstraint],
    objective: Objective,
) -> Option<Option<Rational>> {
    let p = LpProblem {
        num_vars,
        constraints: rows.iter().map(|c| c.closure()).collect(),
        objective: Some(objective),
    };
    let out = lp_feasible(&p);
    match out.status {
        LpStatus::Infeasible(_) => None,
        LpStatus::Unbounded { .. } => Some(None),
        LpStatus::Feasible(_) => Some(out.optimum),
    }
}
