//! Bounded breadth-first symbolic reachability over polyhedra, for automata
//! of any shape (including additive updates).

use std::collections::HashSet;

use crate::geometry::{
    lp_feasible, time_elapse_with_budget, AffineExpr, BudgetExceeded, LinearConstraint, LpProblem, LpStatus,
    Polyhedron, Relation,
};
use crate::model::{HybridAutomaton, UpdateKind};
use crate::rational::Rational;
use crate::run::{Step, TimedRun};
use crate::stats::Stats;

/// Row budget for a single projection.
pub const ROW_BUDGET: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymbolicState {
    pub mode: usize,
    pub poly: Polyhedron,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoundedOutcome {
    Reached { actions: Vec<usize>, run: TimedRun },
    NotWithinDepth,
    Unknown(String),
}

fn tidy(p: Polyhedron, dim: usize) -> Polyhedron {
    p.without_redundant(dim)
}

fn apply_updates(h: &HybridAutomaton, t: usize, p: &Polyhedron) -> Result<Polyhedron, BudgetExceeded> {
    let mut p = p.clone();
    for u in &h.transitions[t].updates {
        p = match u.kind {
            UpdateKind::Set => p.assign_constant(u.var, &u.amount)?,
            UpdateKind::Add => p.shift(u.var, &u.amount),
        };
    }
    Ok(p)
}

fn elapse(h: &HybridAutomaton, s: &SymbolicState) -> Result<Polyhedron, BudgetExceeded> {
    let m = &h.modes[s.mode];
    time_elapse_with_budget(&s.poly, &m.rate, &m.invariant, ROW_BUDGET)
}

fn successors(
    h: &HybridAutomaton,
    mode: usize,
    elapsed: &Polyhedron,
) -> Result<Vec<(usize, SymbolicState)>, BudgetExceeded> {
    let mut out = Vec::new();
    for t in h.outgoing(mode) {
        let tr = &h.transitions[t];
        let g = elapsed.intersect(&tr.guard);
        if g.is_empty() {
            continue;
        }
        let post = apply_updates(h, t, &g)?.intersect(&h.modes[tr.to].invariant);
        if post.is_empty() {
            continue;
        }
        out.push((t, SymbolicState { mode: tr.to, poly: tidy(post, h.dim()) }));
    }
    Ok(out)
}

/// One discrete step from `s`: elapse, guard, updates, destination invariant.
pub fn post(h: &HybridAutomaton, s: &SymbolicState) -> Result<Vec<SymbolicState>, BudgetExceeded> {
    let e = elapse(h, s)?;
    Ok(successors(h, s.mode, &e)?.into_iter().map(|(_, s)| s).collect())
}

/// Explores up to `depth` discrete transitions from `(init_mode, init)` looking
/// for a configuration in `target` whose mode is in `target_modes` (all modes
/// when `None`).
pub fn bounded_reach(
    h: &HybridAutomaton,
    init_mode: usize,
    init: &Polyhedron,
    target_modes: Option<&[usize]>,
    target: &Polyhedron,
    depth: usize,
    stats: &mut Stats,
) -> BoundedOutcome {
    let start = init.intersect(&h.modes[init_mode].invariant);
    if start.is_empty() {
        return BoundedOutcome::NotWithinDepth;
    }
    // (state, parent index, action into it)
    let mut states: Vec<(SymbolicState, Option<(usize, usize)>)> =
        vec![(SymbolicState { mode: init_mode, poly: tidy(start, h.dim()) }, None)];
    let mut seen: HashSet<(usize, Polyhedron)> = HashSet::new();
    seen.insert((init_mode, states[0].0.poly.normalized()));
    let mut frontier = vec![0usize];
    for level in 0..=depth {
        let mut next = Vec::new();
        for &i in &frontier {
            stats.states_explored += 1;
            let s = states[i].0.clone();
            let e = match elapse(h, &s) {
                Ok(e) => e,
                Err(b) => return BoundedOutcome::Unknown(b.to_string()),
            };
            let in_modes = target_modes.map_or(true, |ms| ms.contains(&s.mode));
            if in_modes && !e.intersect(target).is_empty() {
                let mut actions = Vec::new();
                let mut cur = i;
                while let Some((p, a)) = states[cur].1 {
                    actions.push(a);
                    cur = p;
                }
                actions.reverse();
                return match path_witness(h, init_mode, init, &actions, target) {
                    Some(run) => BoundedOutcome::Reached { actions, run },
                    None => BoundedOutcome::Unknown("no concrete witness along the symbolic path".into()),
                };
            }
            if level == depth {
                continue;
            }
            let succ = match successors(h, s.mode, &e) {
                Ok(v) => v,
                Err(b) => return BoundedOutcome::Unknown(b.to_string()),
            };
            for (t, st) in succ {
                if seen.insert((st.mode, st.poly.normalized())) {
                    states.push((st, Some((i, t))));
                    next.push(states.len() - 1);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    BoundedOutcome::NotWithinDepth
}

/// Concrete run along `actions` from a point of `init` ending in `target`,
/// from one LP over the start point and the dwell times.
pub fn path_witness(
    h: &HybridAutomaton,
    init_mode: usize,
    init: &Polyhedron,
    actions: &[usize],
    target: &Polyhedron,
) -> Option<TimedRun> {
    let n = h.dim();
    let k = actions.len() + 1;
    let dwell = |i: usize| n + i;
    let mut rows: Vec<LinearConstraint> = Vec::new();
    let add = |p: &Polyhedron, at: &[AffineExpr], rows: &mut Vec<LinearConstraint>| -> bool {
        if p.is_bottom_marker() {
            return false;
        }
        rows.extend(p.constraints.iter().map(|c| c.compose(at)));
        true
    };
    let mut cur: Vec<AffineExpr> = (0..n).map(AffineExpr::var).collect();
    let mut ok = add(init, &cur, &mut rows);
    let mut mode = init_mode;
    for i in 0..k {
        rows.push(LinearConstraint::bound(dwell(i), Relation::Ge, Rational::zero()));
        ok &= add(&h.modes[mode].invariant, &cur, &mut rows);
        for (v, r) in h.modes[mode].rate.iter().enumerate() {
            if !r.is_zero() {
                cur[v].add_term(dwell(i), r);
            }
        }
        ok &= add(&h.modes[mode].invariant, &cur, &mut rows);
        if let Some(&a) = actions.get(i) {
            let t = &h.transitions[a];
            ok &= add(&t.guard, &cur, &mut rows);
            for u in &t.updates {
                u.apply_affine(&mut cur);
            }
            mode = t.to;
        }
    }
    ok &= add(target, &cur, &mut rows);
    if !ok {
        return None;
    }
    let sol = match lp_feasible(&LpProblem::with_constraints(n + k, rows)).status {
        LpStatus::Feasible(w) => w,
        _ => return None,
    };
    let start = sol[..n].to_vec();
    let mut steps = Vec::new();
    let mut mode = init_mode;
    for i in 0..k {
        let action = actions.get(i).copied();
        steps.push(Step { mode, dwell: sol[dwell(i)].clone(), action });
        if let Some(a) = action {
            mode = h.transitions[a].to;
        }
    }
    let run = TimedRun { start_mode: init_mode, start, steps };
    let (_, end) = run.replay(h).ok()?;
    target.contains(&end).then_some(run)
}
