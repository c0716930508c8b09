//! Constant-rate multi-mode systems: the dwell-time LPs for reachability and
//! schedulability, and the scaling construction that turns dwell times into runs.

use crate::geometry::{lp_feasible, LinearConstraint, LpProblem, LpStatus, Polyhedron, Relation};
use crate::graph::bfs_path;
use crate::model::{infer_ranks, HybridAutomaton, RankAssignment, Valuation};
use crate::rational::Rational;
use crate::run::{Lasso, Step, StepBuilder, TimedRun};
use crate::stats::Stats;

/// Dwell times per mode of the automaton (zero outside the class).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DwellSolution {
    pub class: usize,
    pub times: Vec<Rational>,
}

impl DwellSolution {
    pub fn total(&self) -> Rational {
        self.times.iter().cloned().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CmsError {
    #[error("precondition violated: {0}")]
    PreconditionViolation(String),
    #[error("not a constant-rate multi-mode system: {0}")]
    NotCms(String),
    #[error("internal error: {0}")]
    Internal(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SchedOutcome {
    Yes(DwellSolution),
    /// `direction · F(m) >= 1` for every mode: any run drifts along `direction`.
    No { direction: Vec<Rational> },
}

/// A rank class viewed as a CMS of its own.
#[derive(Debug, Clone, Copy)]
pub struct ClassView<'a> {
    pub h: &'a HybridAutomaton,
    pub index: usize,
    pub modes: &'a [usize],
    pub safety: &'a Polyhedron,
}

impl<'a> ClassView<'a> {
    pub fn new(h: &'a HybridAutomaton, ranks: &'a RankAssignment, index: usize) -> Self {
        let c = &ranks.classes[index];
        ClassView { h, index, modes: &c.modes, safety: &c.safety }
    }

    fn contains_mode(&self, m: usize) -> bool {
        self.modes.binary_search(&m).is_ok()
    }

    /// `c·F(m)` for each class mode, as coefficients over the dwell variables
    /// starting at `offset`.
    pub fn rate_row(&self, c: &LinearConstraint, offset: usize) -> Vec<(usize, Rational)> {
        self.modes
            .iter()
            .enumerate()
            .map(|(j, &m)| {
                let r: Rational = c.coeffs.iter().map(|(v, a)| a * &self.h.modes[m].rate[*v]).sum();
                (offset + j, r)
            })
            .collect()
    }

    fn lift(&self, local: &[Rational]) -> DwellSolution {
        let mut times = vec![Rational::zero(); self.h.modes.len()];
        for (j, &m) in self.modes.iter().enumerate() {
            times[m] = local[j].clone();
        }
        DwellSolution { class: self.index, times }
    }

    /// `ν0 + Σ F(m)·t_m`.
    pub fn displaced(&self, v0: &[Rational], times: &[Rational]) -> Valuation {
        let mut v = v0.to_vec();
        for &m in self.modes {
            if !times[m].is_zero() {
                v = self.h.flow(m, &v, &times[m]);
            }
        }
        v
    }

    /// Eq. (1): dwell times moving `v0` into `target ∩ S`.
    pub fn reach_lp(&self, v0: &[Rational], target: &Polyhedron, stats: &mut Stats) -> Option<DwellSolution> {
        if target.is_bottom_marker() {
            return None;
        }
        let k = self.modes.len();
        let mut p = LpProblem::new(k);
        for c in target.constraints.iter().chain(&self.safety.constraints) {
            p.add(LinearConstraint::new(self.rate_row(c, 0), c.rel, &c.rhs - &c.lhs(v0)));
        }
        for j in 0..k {
            p.add(LinearConstraint::bound(j, Relation::Ge, Rational::zero()));
        }
        stats.lp_calls += 1;
        match lp_feasible(&p).status {
            LpStatus::Feasible(t) => Some(self.lift(&t)),
            _ => None,
        }
    }

    /// Eq. (2): `Σ F(m)·t_m = 0`, `Σ t_m = 1`, `t >= 0`.
    pub fn sched_lp(&self, stats: &mut Stats) -> Option<DwellSolution> {
        let k = self.modes.len();
        let mut p = LpProblem::new(k);
        for v in 0..self.h.dim() {
            let coeffs = self.modes.iter().enumerate().map(|(j, &m)| (j, self.h.modes[m].rate[v].clone()));
            p.add(LinearConstraint::new(coeffs, Relation::Eq, Rational::zero()));
        }
        p.add(LinearConstraint::new((0..k).map(|j| (j, Rational::one())), Relation::Eq, Rational::one()));
        for j in 0..k {
            p.add(LinearConstraint::bound(j, Relation::Ge, Rational::zero()));
        }
        stats.lp_calls += 1;
        match lp_feasible(&p).status {
            LpStatus::Feasible(t) => Some(self.lift(&t)),
            _ => None,
        }
    }

    /// A vector `v` with `v·F(m) >= 1` for all class modes, verified exactly.
    pub fn drift_direction(&self, stats: &mut Stats) -> Option<Vec<Rational>> {
        let n = self.h.dim();
        let mut p = LpProblem::new(n);
        for &m in self.modes {
            let coeffs = self.h.modes[m].rate.iter().cloned().enumerate();
            p.add(LinearConstraint::new(coeffs, Relation::Ge, Rational::one()));
        }
        stats.lp_calls += 1;
        let v = match lp_feasible(&p).status {
            LpStatus::Feasible(v) => v,
            _ => return None,
        };
        let ok = self.modes.iter().all(|&m| {
            let dot: Rational = v.iter().zip(&self.h.modes[m].rate).map(|(a, b)| a * b).sum();
            dot >= Rational::one()
        });
        ok.then_some(v)
    }

    fn succ(&self, u: usize) -> Vec<usize> {
        self.h.outgoing(u).map(|t| self.h.transitions[t].to).filter(|&d| self.contains_mode(d)).collect()
    }

    fn edge(&self, a: usize, b: usize) -> usize {
        self.h.outgoing(a).find(|&t| self.h.transitions[t].to == b).expect("edge on a BFS path")
    }

    fn path(&self, from: usize, to: usize) -> Result<Vec<usize>, CmsError> {
        bfs_path(from, to, self.h.modes.len(), |u| self.succ(u), |m| self.contains_mode(m))
            .ok_or_else(|| CmsError::Internal(format!("no path inside the class to {}", self.h.modes[to].name)))
    }

    /// Closed walk from `entry` through every mode of `support`, stitched from
    /// shortest paths. `[entry]` when nothing needs visiting.
    pub fn covering_walk(&self, entry: usize, support: &[usize]) -> Result<Vec<usize>, CmsError> {
        let mut walk = vec![entry];
        for &s in support {
            if walk.contains(&s) {
                continue;
            }
            let p = self.path(*walk.last().unwrap(), s)?;
            walk.extend_from_slice(&p[1..]);
        }
        if walk.len() > 1 {
            let p = self.path(*walk.last().unwrap(), entry)?;
            walk.extend_from_slice(&p[1..]);
        }
        Ok(walk)
    }

    /// Moves along the shortest in-class path with zero dwell.
    pub fn transfer(&self, b: &mut StepBuilder, from: usize, to: usize) -> Result<(), CmsError> {
        let p = self.path(from, to)?;
        for w in p.windows(2) {
            b.take(w[0], self.edge(w[0], w[1]));
        }
        Ok(())
    }

    /// Upper-bound form `a·x < b` of the safety rows.
    fn safety_rows(&self) -> Vec<LinearConstraint> {
        self.safety.constraints.iter().map(|c| c.normalized()).collect()
    }

    fn row_rate_bound(&self, row: &LinearConstraint, support: &[usize]) -> Rational {
        support
            .iter()
            .map(|&m| row.lhs(&self.h.modes[m].rate).abs())
            .fold(Rational::zero(), Rational::max)
    }

    /// Realizes `times` from `(entry, v0)` inside the class: N rounds over a
    /// covering walk, each dwelling `t_m/N`, then a zero-dwell path to `exit`.
    pub fn reach_steps(
        &self,
        b: &mut StepBuilder,
        entry: usize,
        v0: &[Rational],
        times: &[Rational],
        exit: Option<usize>,
    ) -> Result<(), CmsError> {
        let support: Vec<usize> = self.modes.iter().copied().filter(|&m| times[m].is_positive()).collect();
        if support.iter().any(|&m| m != entry) {
            let walk = self.covering_walk(entry, &support)?;
            let total: Rational = support.iter().map(|&m| times[m].clone()).sum();
            let end = self.displaced(v0, times);
            let rows = self.safety_rows();
            let mut min_slack: Option<Rational> = None;
            let mut max_dev = Rational::zero();
            for r in &rows {
                let s = (&r.rhs - &r.lhs(v0)).min(&r.rhs - &r.lhs(&end));
                min_slack = Some(match min_slack {
                    Some(m) => m.min(s),
                    None => s,
                });
                max_dev = max_dev.max(&self.row_rate_bound(r, &support) * &total);
            }
            let rounds: u64 = match min_slack {
                Some(s) if s.is_positive() => {
                    let q = (&max_dev / &s).floor();
                    u64::try_from(q + 1u32).map_err(|_| CmsError::Internal("round count overflow".into()))?
                }
                Some(_) => return Err(CmsError::PreconditionViolation("endpoint on the safety boundary".into())),
                None => 1,
            };
            if rounds > 1_000_000 {
                return Err(CmsError::Internal(format!("{rounds} rounds needed")));
            }
            let n = Rational::from_int(rounds as i64);
            let k = walk.len() - 1;
            let share: Vec<Rational> = (0..k)
                .map(|j| {
                    let m = walk[j];
                    if walk[..j].contains(&m) {
                        Rational::zero()
                    } else {
                        &times[m] / &n
                    }
                })
                .collect();
            for _ in 0..rounds {
                for j in 0..k {
                    b.dwell(walk[j], share[j].clone());
                    b.take(walk[j], self.edge(walk[j], walk[j + 1]));
                }
            }
        } else if !support.is_empty() {
            b.dwell(entry, times[entry].clone());
        }
        if let Some(x) = exit {
            if x != entry {
                self.transfer(b, entry, x)?;
            }
        }
        Ok(())
    }

    /// One period of a cycle from `(entry, v0)` realizing `λ·times` with λ
    /// small enough that the trajectory stays in the safety set. The cycle
    /// also passes through every mode of `visit`.
    pub fn cycle_steps(
        &self,
        entry: usize,
        v0: &[Rational],
        times: &[Rational],
        visit: &[usize],
    ) -> Result<Vec<Step>, CmsError> {
        let mut support: Vec<usize> = self.modes.iter().copied().filter(|&m| times[m].is_positive()).collect();
        let total: Rational = support.iter().map(|&m| times[m].clone()).sum();
        if !total.is_positive() {
            return Err(CmsError::Internal("cycle with zero total dwell".into()));
        }
        let mut lambda = Rational::one();
        for r in self.safety_rows() {
            let slack = &r.rhs - &r.lhs(v0);
            if !slack.is_positive() {
                return Err(CmsError::PreconditionViolation("cycle start on the safety boundary".into()));
            }
            let rate = &self.row_rate_bound(&r, &support) * &total;
            if rate.is_positive() {
                lambda = lambda.min(&slack / &(&rate * &Rational::from_int(2)));
            }
        }
        for &m in visit {
            if !support.contains(&m) {
                support.push(m);
            }
        }
        let walk = self.covering_walk(entry, &support)?;
        let mut b = StepBuilder::default();
        if walk.len() == 1 {
            b.dwell(entry, &lambda * &times[entry]);
            return Ok(b.steps);
        }
        for j in 0..walk.len() - 1 {
            let m = walk[j];
            let d = if walk[..j].contains(&m) { Rational::zero() } else { &lambda * &times[m] };
            b.dwell(m, d);
            b.take(m, self.edge(m, walk[j + 1]));
        }
        Ok(b.steps)
    }
}

fn cms_view(h: &HybridAutomaton) -> Result<RankAssignment, CmsError> {
    let ranks = infer_ranks(h).map_err(|e| CmsError::NotCms(e.to_string()))?;
    if ranks.classes.len() != 1 {
        return Err(CmsError::NotCms(format!("{} rank classes", ranks.classes.len())));
    }
    Ok(ranks)
}

fn check_interior(view: &ClassView, v0: &[Rational]) -> Result<(), CmsError> {
    if v0.len() != view.h.dim() {
        return Err(CmsError::PreconditionViolation("valuation has the wrong dimension".into()));
    }
    if !view.safety.contains(v0) {
        return Err(CmsError::PreconditionViolation(format!(
            "{} is not inside the safety set",
            view.h.format_valuation(v0)
        )));
    }
    Ok(())
}

/// Reachability of `target` from `v0` in a CMS.
pub fn cms_reachable(
    h: &HybridAutomaton,
    v0: &[Rational],
    target: &Polyhedron,
    stats: &mut Stats,
) -> Result<Option<DwellSolution>, CmsError> {
    let ranks = cms_view(h)?;
    let view = ClassView::new(h, &ranks, 0);
    check_interior(&view, v0)?;
    if target.intersect(view.safety).is_empty() {
        return Err(CmsError::PreconditionViolation("target is disjoint from the safety set".into()));
    }
    Ok(view.reach_lp(v0, target, stats))
}

/// Schedulability from `v0` in a CMS, with a drift direction on No.
pub fn cms_schedulable(h: &HybridAutomaton, v0: &[Rational], stats: &mut Stats) -> Result<SchedOutcome, CmsError> {
    let ranks = cms_view(h)?;
    let view = ClassView::new(h, &ranks, 0);
    check_interior(&view, v0)?;
    match view.sched_lp(stats) {
        Some(sol) => Ok(SchedOutcome::Yes(sol)),
        None => match view.drift_direction(stats) {
            Some(direction) => Ok(SchedOutcome::No { direction }),
            None => Err(CmsError::Internal("neither a schedule nor a drift direction".into())),
        },
    }
}

/// Concrete run from the first initial mode realizing a reachability solution.
pub fn build_reach_witness(
    h: &HybridAutomaton,
    v0: &[Rational],
    target: &Polyhedron,
    sol: &DwellSolution,
) -> Result<TimedRun, CmsError> {
    let ranks = cms_view(h)?;
    let view = ClassView::new(h, &ranks, 0);
    let entry = h.initial[0];
    let mut b = StepBuilder::default();
    view.reach_steps(&mut b, entry, v0, &sol.times, None)?;
    let run = TimedRun { start_mode: entry, start: v0.to_vec(), steps: b.steps };
    let (_, end) = run.replay(h).map_err(|e| CmsError::Internal(e.to_string()))?;
    if !target.contains(&end) {
        return Err(CmsError::Internal("witness does not end in the target".into()));
    }
    Ok(run)
}

/// Lasso whose cycle realizes a scaled copy of a schedulability solution.
pub fn build_sched_witness(h: &HybridAutomaton, v0: &[Rational], sol: &DwellSolution) -> Result<Lasso, CmsError> {
    let ranks = cms_view(h)?;
    let view = ClassView::new(h, &ranks, 0);
    let entry = h.initial[0];
    let cycle = view.cycle_steps(entry, v0, &sol.times, &[])?;
    let lasso = Lasso { prefix: TimedRun::empty(entry, v0.to_vec()), cycle };
    lasso.replay(h).map_err(|e| CmsError::Internal(e.to_string()))?;
    Ok(lasso)
}
