//! Weak singular hybrid automata: run-type enumeration and the per-type LPs
//! for reachability and schedulability.

use std::collections::HashSet;
use std::fmt;

use crate::cms::{ClassView, CmsError};
use crate::geometry::{lp_feasible, AffineExpr, LinearConstraint, LpProblem, LpStatus, Polyhedron, Relation};
use crate::model::{HybridAutomaton, RankAssignment, Valuation};
use crate::rational::Rational;
use crate::run::{Lasso, StepBuilder, TimedRun};
use crate::stats::Stats;

/// `⟨n0, b1, n1, …, bp, np⟩`: class ranks and the boundary transitions between them.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RunType {
    pub ranks: Vec<usize>,
    pub actions: Vec<usize>,
}

impl RunType {
    pub fn single(rank: usize) -> Self {
        RunType { ranks: vec![rank], actions: Vec::new() }
    }

    pub fn last_rank(&self) -> usize {
        *self.ranks.last().unwrap()
    }

    pub fn extended(&self, action: usize, rank: usize) -> Self {
        let mut t = self.clone();
        t.actions.push(action);
        t.ranks.push(rank);
        t
    }

    pub fn display(&self, h: &HybridAutomaton) -> String {
        let mut parts = vec![self.ranks[0].to_string()];
        for (a, r) in self.actions.iter().zip(&self.ranks[1..]) {
            parts.push(h.transitions[*a].action.clone());
            parts.push(r.to_string());
        }
        format!("<{}>", parts.join(", "))
    }
}

impl fmt::Display for RunType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = vec![self.ranks[0].to_string()];
        for (a, r) in self.actions.iter().zip(&self.ranks[1..]) {
            parts.push(format!("#{a}"));
            parts.push(r.to_string());
        }
        write!(f, "<{}>", parts.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WshaError {
    #[error("precondition violated: {0}")]
    PreconditionViolation(String),
    #[error("malformed run type: {0}")]
    MalformedType(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl From<CmsError> for WshaError {
    fn from(e: CmsError) -> Self {
        match e {
            CmsError::PreconditionViolation(m) => WshaError::PreconditionViolation(m),
            other => WshaError::Internal(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOptions {
    pub pruning: bool,
    pub jobs: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { pruning: true, jobs: 1 }
    }
}

/// Boundary transitions leaving class `rank`, ordered by action name.
fn boundary_out(h: &HybridAutomaton, ranks: &RankAssignment, rank: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (0..h.transitions.len())
        .filter(|&t| {
            let tr = &h.transitions[t];
            ranks.rank[tr.from] == rank && ranks.rank[tr.to] != rank
        })
        .collect();
    out.sort_by(|&a, &b| h.transitions[a].action.cmp(&h.transitions[b].action));
    out
}

/// All run types starting in the class of `from`, by length and then by
/// action names.
pub fn enumerate_run_types(h: &HybridAutomaton, ranks: &RankAssignment, from: usize) -> Vec<RunType> {
    let mut out = Vec::new();
    let mut level = vec![RunType::single(ranks.rank[from])];
    while !level.is_empty() {
        let mut next = Vec::new();
        for t in &level {
            for a in boundary_out(h, ranks, t.last_rank()) {
                next.push(t.extended(a, ranks.rank[h.transitions[a].to]));
            }
        }
        out.append(&mut level);
        level = next;
    }
    out
}

/// Dwell times and class entry/exit valuations of a feasible type LP.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeLpSolution {
    pub entry: Vec<Valuation>,
    pub exit: Vec<Valuation>,
    /// `times[i][m]` is the dwell in mode `m` during class `i` of the type.
    pub times: Vec<Vec<Rational>>,
}

/// The LP of a run type over dwell variables only; valuations are affine in them.
struct TypeLp<'a> {
    views: Vec<ClassView<'a>>,
    offsets: Vec<usize>,
    num_vars: usize,
    rows: Vec<LinearConstraint>,
    seen: HashSet<LinearConstraint>,
    exit_exprs: Vec<AffineExpr>,
    contradiction: bool,
}

impl<'a> TypeLp<'a> {
    fn add(&mut self, c: LinearConstraint) {
        match c.trivial_truth() {
            Some(true) => return,
            Some(false) => self.contradiction = true,
            None => {}
        }
        let key = c.normalized();
        if self.seen.insert(key) {
            self.rows.push(c);
        }
    }

    fn add_poly(&mut self, p: &Polyhedron, at: &[AffineExpr]) {
        if p.is_bottom_marker() {
            self.contradiction = true;
            return;
        }
        for c in &p.constraints {
            self.add(c.compose(at));
        }
    }

    fn build(
        h: &'a HybridAutomaton,
        ranks: &'a RankAssignment,
        sigma: &RunType,
        v0: &[Rational],
    ) -> Result<TypeLp<'a>, WshaError> {
        check_type(h, ranks, sigma)?;
        let views: Vec<ClassView> = sigma.ranks.iter().map(|&r| ClassView::new(h, ranks, r)).collect();
        let mut offsets = Vec::new();
        let mut num_vars = 0;
        for v in &views {
            offsets.push(num_vars);
            num_vars += v.modes.len();
        }
        let mut lp = TypeLp {
            views,
            offsets,
            num_vars,
            rows: Vec::new(),
            seen: HashSet::new(),
            exit_exprs: Vec::new(),
            contradiction: false,
        };
        for j in 0..num_vars {
            lp.add(LinearConstraint::bound(j, Relation::Ge, Rational::zero()));
        }
        let mut cur: Vec<AffineExpr> = v0.iter().map(|x| AffineExpr::constant(x.clone())).collect();
        for i in 0..lp.views.len() {
            let view = lp.views[i];
            lp.add_poly(view.safety, &cur);
            for (j, &m) in view.modes.iter().enumerate() {
                for (v, r) in h.modes[m].rate.iter().enumerate() {
                    if !r.is_zero() {
                        cur[v].add_term(lp.offsets[i] + j, r);
                    }
                }
            }
            lp.add_poly(view.safety, &cur);
            lp.exit_exprs = cur.clone();
            if let Some(&a) = sigma.actions.get(i) {
                let t = &h.transitions[a];
                lp.add_poly(&t.guard, &cur);
                for u in &t.updates {
                    u.apply_affine(&mut cur);
                }
            }
        }
        Ok(lp)
    }

    fn add_target(&mut self, target: &Polyhedron) {
        let at = self.exit_exprs.clone();
        self.add_poly(target, &at);
    }

    fn add_cycle(&mut self, h: &HybridAutomaton) {
        let p = self.views.len() - 1;
        let view = self.views[p];
        let off = self.offsets[p];
        for v in 0..h.dim() {
            let coeffs = view.modes.iter().enumerate().map(|(j, &m)| (off + j, h.modes[m].rate[v].clone()));
            self.add(LinearConstraint::new(coeffs, Relation::Eq, Rational::zero()));
        }
        let ones = (0..view.modes.len()).map(|j| (off + j, Rational::one()));
        self.add(LinearConstraint::new(ones, Relation::Eq, Rational::one()));
    }

    fn solve(self, h: &HybridAutomaton, v0: &[Rational], sigma: &RunType, stats: &mut Stats) -> Option<TypeLpSolution> {
        if self.contradiction {
            return None;
        }
        stats.lp_calls += 1;
        let p = LpProblem::with_constraints(self.num_vars, self.rows);
        let t = match lp_feasible(&p).status {
            LpStatus::Feasible(t) => t,
            _ => return None,
        };
        let mut times = Vec::new();
        for (i, view) in self.views.iter().enumerate() {
            let mut local = vec![Rational::zero(); h.modes.len()];
            for (j, &m) in view.modes.iter().enumerate() {
                local[m] = t[self.offsets[i] + j].clone();
            }
            times.push(local);
        }
        let mut entry = Vec::new();
        let mut exit = Vec::new();
        let mut cur = v0.to_vec();
        for (i, view) in self.views.iter().enumerate() {
            entry.push(cur.clone());
            cur = view.displaced(&cur, &times[i]);
            exit.push(cur.clone());
            if let Some(&a) = sigma.actions.get(i) {
                cur = h.transitions[a].apply_updates(&cur);
            }
        }
        Some(TypeLpSolution { entry, exit, times })
    }
}

fn check_type(h: &HybridAutomaton, ranks: &RankAssignment, sigma: &RunType) -> Result<(), WshaError> {
    if sigma.ranks.is_empty() || sigma.ranks.len() != sigma.actions.len() + 1 {
        return Err(WshaError::MalformedType("ranks and actions do not alternate".into()));
    }
    if sigma.ranks.iter().any(|&r| r >= ranks.classes.len()) {
        return Err(WshaError::MalformedType("unknown rank".into()));
    }
    for (i, &a) in sigma.actions.iter().enumerate() {
        let Some(t) = h.transitions.get(a) else {
            return Err(WshaError::MalformedType(format!("unknown action #{a}")));
        };
        if ranks.rank[t.from] != sigma.ranks[i] || ranks.rank[t.to] != sigma.ranks[i + 1] {
            return Err(WshaError::MalformedType(format!("action {} does not join ranks {} and {}", t.action, sigma.ranks[i], sigma.ranks[i + 1])));
        }
        if sigma.ranks[i + 1] <= sigma.ranks[i] {
            return Err(WshaError::MalformedType("ranks are not increasing".into()));
        }
    }
    Ok(())
}

/// The reachability LP of a run type.
pub fn type_reach_lp(
    h: &HybridAutomaton,
    ranks: &RankAssignment,
    sigma: &RunType,
    v0: &[Rational],
    target: &Polyhedron,
    stats: &mut Stats,
) -> Result<Option<TypeLpSolution>, WshaError> {
    let mut lp = TypeLp::build(h, ranks, sigma, v0)?;
    lp.add_target(target);
    Ok(lp.solve(h, v0, sigma, stats))
}

/// The schedulability LP of a run type: reach the last class, then balance there.
pub fn type_sched_lp(
    h: &HybridAutomaton,
    ranks: &RankAssignment,
    sigma: &RunType,
    v0: &[Rational],
    stats: &mut Stats,
) -> Result<Option<TypeLpSolution>, WshaError> {
    let mut lp = TypeLp::build(h, ranks, sigma, v0)?;
    lp.add_cycle(h);
    Ok(lp.solve(h, v0, sigma, stats))
}

fn partial_feasible(h: &HybridAutomaton, ranks: &RankAssignment, sigma: &RunType, v0: &[Rational], stats: &mut Stats) -> bool {
    TypeLp::build(h, ranks, sigma, v0).ok().and_then(|lp| lp.solve(h, v0, sigma, stats)).is_some()
}

/// Stitches per-class runs and boundary transitions for the first `upto`
/// classes of `sigma`; the last of them ends at its exit valuation.
fn stitch(
    h: &HybridAutomaton,
    ranks: &RankAssignment,
    sigma: &RunType,
    sol: &TypeLpSolution,
    start_mode: usize,
    upto: usize,
) -> Result<(StepBuilder, usize), WshaError> {
    let mut b = StepBuilder::default();
    let mut entry = start_mode;
    for i in 0..upto {
        let view = ClassView::new(h, ranks, sigma.ranks[i]);
        let exit = sigma.actions.get(i).filter(|_| i + 1 < upto).map(|&a| h.transitions[a].from);
        view.reach_steps(&mut b, entry, &sol.entry[i], &sol.times[i], exit)?;
        if let Some(x) = exit {
            let a = sigma.actions[i];
            b.take(x, a);
            entry = h.transitions[a].to;
        }
    }
    Ok((b, entry))
}

/// Witness run for a feasible reachability type.
pub fn reach_witness(
    h: &HybridAutomaton,
    ranks: &RankAssignment,
    sigma: &RunType,
    sol: &TypeLpSolution,
    start_mode: usize,
    v0: &[Rational],
    target: &Polyhedron,
) -> Result<TimedRun, WshaError> {
    let (b, _) = stitch(h, ranks, sigma, sol, start_mode, sigma.ranks.len())?;
    let run = TimedRun { start_mode, start: v0.to_vec(), steps: b.steps };
    let (_, end) = run.replay(h).map_err(|e| WshaError::Internal(e.to_string()))?;
    if !target.contains(&end) {
        return Err(WshaError::Internal("witness misses the target".into()));
    }
    Ok(run)
}

/// Witness lasso for a feasible schedulability type; the cycle also visits `visit`.
pub fn sched_witness(
    h: &HybridAutomaton,
    ranks: &RankAssignment,
    sigma: &RunType,
    sol: &TypeLpSolution,
    start_mode: usize,
    v0: &[Rational],
    visit: &[usize],
) -> Result<Lasso, WshaError> {
    let p = sigma.ranks.len() - 1;
    let (mut b, entry) = stitch(h, ranks, sigma, sol, start_mode, p)?;
    if p > 0 {
        // Leave class p-1 through the boundary action into class p.
        let view = ClassView::new(h, ranks, sigma.ranks[p - 1]);
        let a = sigma.actions[p - 1];
        view.transfer(&mut b, entry, h.transitions[a].from)?;
        b.take(h.transitions[a].from, a);
    }
    let cycle_entry = if p == 0 { start_mode } else { h.transitions[sigma.actions[p - 1]].to };
    let view = ClassView::new(h, ranks, sigma.ranks[p]);
    let cycle = view.cycle_steps(cycle_entry, &sol.entry[p], &sol.times[p], visit)?;
    let lasso = Lasso { prefix: TimedRun { start_mode, start: v0.to_vec(), steps: b.steps }, cycle };
    lasso.replay(h).map_err(|e| WshaError::Internal(e.to_string()))?;
    Ok(lasso)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReachResult {
    Yes { run_type: RunType, initial: usize, run: TimedRun },
    No,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SchedResult {
    Yes { run_type: RunType, initial: usize, lasso: Lasso },
    No,
}

fn initial_modes(h: &HybridAutomaton, ranks: &RankAssignment, v0: &[Rational]) -> Result<Vec<usize>, WshaError> {
    if v0.len() != h.dim() {
        return Err(WshaError::PreconditionViolation("valuation has the wrong dimension".into()));
    }
    let out: Vec<usize> = h
        .initial
        .iter()
        .copied()
        .filter(|&m| ranks.classes[ranks.rank[m]].safety.contains(v0))
        .collect();
    if out.is_empty() {
        return Err(WshaError::PreconditionViolation(format!(
            "{} is not inside the safety set of any initial mode",
            h.format_valuation(v0)
        )));
    }
    Ok(out)
}

enum Check {
    Found(TypeLpSolution),
    Extend,
    Prune,
}

/// Level-by-level search over run types. `check` decides a complete type;
/// returns the first success in enumeration order.
fn search<F>(
    h: &HybridAutomaton,
    ranks: &RankAssignment,
    from: usize,
    v0: &[Rational],
    opts: SearchOptions,
    stats: &mut Stats,
    check: F,
) -> Option<(RunType, TypeLpSolution)>
where
    F: Fn(&RunType, &mut Stats) -> Option<TypeLpSolution> + Sync,
{
    let eval = |sigma: &RunType, stats: &mut Stats| -> Check {
        stats.types_enumerated += 1;
        if let Some(sol) = check(sigma, stats) {
            return Check::Found(sol);
        }
        if boundary_out(h, ranks, sigma.last_rank()).is_empty() {
            return Check::Prune;
        }
        if opts.pruning && !partial_feasible(h, ranks, sigma, v0, stats) {
            stats.types_pruned += 1;
            return Check::Prune;
        }
        Check::Extend
    };
    let mut level = vec![RunType::single(ranks.rank[from])];
    while !level.is_empty() {
        let results: Vec<(Check, Stats)> = if opts.jobs > 1 && level.len() > 1 {
            let chunk = level.len().div_ceil(opts.jobs);
            std::thread::scope(|s| {
                let handles: Vec<_> = level
                    .chunks(chunk)
                    .map(|part| {
                        let eval = &eval;
                        s.spawn(move || {
                            part.iter()
                                .map(|sigma| {
                                    let mut st = Stats::default();
                                    (eval(sigma, &mut st), st)
                                })
                                .collect::<Vec<_>>()
                        })
                    })
                    .collect();
                handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
            })
        } else {
            let mut out = Vec::new();
            for sigma in &level {
                let mut st = Stats::default();
                let c = eval(sigma, &mut st);
                let found = matches!(c, Check::Found(_));
                out.push((c, st));
                if found {
                    break;
                }
            }
            out
        };
        let mut next = Vec::new();
        for (sigma, (c, st)) in level.iter().zip(results) {
            stats.absorb(&st);
            match c {
                Check::Found(sol) => return Some((sigma.clone(), sol)),
                Check::Prune => {}
                Check::Extend => {
                    for a in boundary_out(h, ranks, sigma.last_rank()) {
                        next.push(sigma.extended(a, ranks.rank[h.transitions[a].to]));
                    }
                }
            }
        }
        level = next;
    }
    None
}

/// Decides whether `target` is reachable from `v0`.
pub fn wsha_reachable(
    h: &HybridAutomaton,
    ranks: &RankAssignment,
    v0: &[Rational],
    target: &Polyhedron,
    opts: SearchOptions,
    stats: &mut Stats,
) -> Result<ReachResult, WshaError> {
    let starts = initial_modes(h, ranks, v0)?;
    let meets: Vec<bool> = ranks.classes.iter().map(|c| !target.intersect(&c.safety).is_empty()).collect();
    if !meets.iter().any(|&b| b) {
        return Ok(ReachResult::No);
    }
    for from in starts {
        let check = |sigma: &RunType, st: &mut Stats| {
            if !meets[sigma.last_rank()] {
                return None;
            }
            type_reach_lp(h, ranks, sigma, v0, target, st).ok().flatten()
        };
        if let Some((sigma, sol)) = search(h, ranks, from, v0, opts, stats, check) {
            let run = reach_witness(h, ranks, &sigma, &sol, from, v0, target)?;
            return Ok(ReachResult::Yes { run_type: sigma, initial: from, run });
        }
    }
    Ok(ReachResult::No)
}

/// Decides whether a non-Zeno run from `v0` exists.
pub fn wsha_schedulable(
    h: &HybridAutomaton,
    ranks: &RankAssignment,
    v0: &[Rational],
    opts: SearchOptions,
    stats: &mut Stats,
) -> Result<SchedResult, WshaError> {
    sched_search(h, ranks, v0, opts, stats, |_| Some(Vec::new()))
}

/// Schedulability restricted to run types whose last class passes `accept`,
/// which also names modes the cycle must visit.
pub fn sched_search<A>(
    h: &HybridAutomaton,
    ranks: &RankAssignment,
    v0: &[Rational],
    opts: SearchOptions,
    stats: &mut Stats,
    accept: A,
) -> Result<SchedResult, WshaError>
where
    A: Fn(usize) -> Option<Vec<usize>> + Sync,
{
    let starts = initial_modes(h, ranks, v0)?;
    for from in starts {
        let check = |sigma: &RunType, st: &mut Stats| {
            accept(sigma.last_rank())?;
            type_sched_lp(h, ranks, sigma, v0, st).ok().flatten()
        };
        if let Some((sigma, sol)) = search(h, ranks, from, v0, opts, stats, check) {
            let visit = accept(sigma.last_rank()).unwrap_or_default();
            let lasso = sched_witness(h, ranks, &sigma, &sol, from, v0, &visit)?;
            return Ok(SchedResult::Yes { run_type: sigma, initial: from, lasso });
        }
    }
    Ok(SchedResult::No)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{infer_ranks, Mode, Transition, Update};
    use crate::rational::rat;

    fn unit_box(dim: usize) -> Polyhedron {
        let mut cs = Vec::new();
        for v in 0..dim {
            cs.push(LinearConstraint::bound(v, Relation::Gt, rat(0, 1)));
            cs.push(LinearConstraint::bound(v, Relation::Lt, rat(10, 1)));
        }
        Polyhedron::new(cs)
    }

    fn automaton(rates: &[i64], edges: &[(usize, &str, usize)]) -> HybridAutomaton {
        let modes = rates
            .iter()
            .enumerate()
            .map(|(i, &r)| Mode { name: format!("m{i}"), rate: vec![rat(r, 1)], invariant: unit_box(1) })
            .collect::<Vec<_>>();
        HybridAutomaton {
            variables: vec!["x".into()],
            labels: vec![Default::default(); modes.len()],
            modes,
            initial: vec![0],
            transitions: edges
                .iter()
                .map(|&(a, n, b)| Transition { from: a, action: n.into(), to: b, guard: Polyhedron::top(), updates: vec![] })
                .collect(),
        }
    }

    #[test]
    fn single_class_has_one_type() {
        let h = automaton(&[1, -1], &[(0, "a", 1), (1, "b", 0)]);
        let r = infer_ranks(&h).unwrap();
        assert_eq!(enumerate_run_types(&h, &r, 0), vec![RunType::single(0)]);
    }

    #[test]
    fn diamond_type_count() {
        // top -> {left, right} -> bottom, two actions per edge.
        let h = automaton(
            &[0, 0, 0, 0],
            &[
                (0, "a1", 1), (0, "a2", 1), (0, "b1", 2), (0, "b2", 2),
                (1, "c1", 3), (1, "c2", 3), (2, "d1", 3), (2, "d2", 3),
            ],
        );
        let r = infer_ranks(&h).unwrap();
        let types = enumerate_run_types(&h, &r, 0);
        assert_eq!(types.len(), 1 + 2 + 2 + (2 * 2 + 2 * 2));
        let lens: Vec<usize> = types.iter().map(|t| t.ranks.len()).collect();
        assert!(lens.windows(2).all(|w| w[0] <= w[1]));
        let set: HashSet<_> = types.iter().collect();
        assert_eq!(set.len(), types.len());
        assert_eq!(types[1].actions, vec![0]);
    }

    #[test]
    fn sched_single_class() {
        let h = automaton(&[1, -1], &[(0, "a", 1), (1, "b", 0)]);
        let r = infer_ranks(&h).unwrap();
        let v0 = vec![rat(1, 1)];
        let mut st = Stats::default();
        assert!(type_sched_lp(&h, &r, &RunType::single(0), &v0, &mut st).unwrap().is_some());
        let h1 = automaton(&[1], &[]);
        let r1 = infer_ranks(&h1).unwrap();
        assert!(type_sched_lp(&h1, &r1, &RunType::single(0), &v0, &mut st).unwrap().is_none());
    }

    #[test]
    fn reach_and_sched_through_chain() {
        // m0 (rate 1) -> m1 (rate -1), guard x > 3 with x := 1, then m1 <-> m2 balance.
        let mut h = automaton(&[1, -1, 1], &[(0, "go", 1), (1, "p", 2), (2, "q", 1)]);
        h.transitions[0].guard = Polyhedron::new([LinearConstraint::bound(0, Relation::Gt, rat(3, 1))]);
        h.transitions[0].updates = vec![Update::set(0, rat(1, 1))];
        let r = infer_ranks(&h).unwrap();
        let v0 = vec![rat(1, 1)];
        let opts = SearchOptions::default();
        let mut st = Stats::default();
        let target = Polyhedron::new([LinearConstraint::bound(0, Relation::Eq, rat(7, 1))]);
        let ReachResult::Yes { run_type, run, .. } = wsha_reachable(&h, &r, &v0, &target, opts, &mut st).unwrap() else {
            panic!()
        };
        assert_eq!(run_type.ranks.len(), 1);
        assert!(run.replay(&h).is_ok());

        let target = Polyhedron::new([LinearConstraint::bound(0, Relation::Eq, rat(1, 2))]);
        let ReachResult::Yes { run_type, run, .. } = wsha_reachable(&h, &r, &v0, &target, opts, &mut st).unwrap() else {
            panic!()
        };
        assert_eq!(run_type.actions, vec![0]);
        let (m, v) = run.replay(&h).unwrap();
        assert!(m == 1 || m == 2);
        assert_eq!(v, vec![rat(1, 2)]);

        let SchedResult::Yes { run_type, lasso, .. } = wsha_schedulable(&h, &r, &v0, opts, &mut st).unwrap() else {
            panic!()
        };
        assert_eq!(run_type.actions, vec![0]);
        assert!(lasso.replay(&h).is_ok());
        assert!(lasso.period().is_positive());

        for pruning in [false, true] {
            let o = SearchOptions { pruning, jobs: 2 };
            let far = Polyhedron::new([LinearConstraint::bound(0, Relation::Eq, rat(20, 1))]);
            assert_eq!(wsha_reachable(&h, &r, &v0, &far, o, &mut st).unwrap(), ReachResult::No);
        }
    }

    #[test]
    fn target_outside_safety_needs_no_lp() {
        let h = automaton(&[1, -1], &[(0, "a", 1), (1, "b", 0)]);
        let r = infer_ranks(&h).unwrap();
        let mut st = Stats::default();
        let far = Polyhedron::new([LinearConstraint::bound(0, Relation::Gt, rat(50, 1))]);
        let out = wsha_reachable(&h, &r, &[rat(1, 1)], &far, SearchOptions::default(), &mut st).unwrap();
        assert_eq!(out, ReachResult::No);
        assert_eq!(st.lp_calls, 0);
    }

    #[test]
    fn malformed_types_rejected() {
        let h = automaton(&[0, 0], &[(0, "a", 1)]);
        let r = infer_ranks(&h).unwrap();
        let bad = RunType { ranks: vec![1, 0], actions: vec![0] };
        let mut st = Stats::default();
        assert!(matches!(
            type_reach_lp(&h, &r, &bad, &[rat(1, 1)], &Polyhedron::top(), &mut st),
            Err(WshaError::MalformedType(_))
        ));
    }
}
