//! LTL model checking of weak automata via the product with a Büchi automaton.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::buchi::{ltl_to_buchi, BuchiAutomaton};
use super::syntax::LtlFormula;
use super::trace::{evaluate_trace, Letter};
use crate::model::{infer_ranks, HybridAutomaton, Mode, RankAssignment, Transition};
use crate::rational::Rational;
use crate::regions::RegionError;
use crate::run::{Lasso, Step, TimedRun};
use crate::stats::Stats;
use crate::wsha::{sched_search, wsha_schedulable, SchedResult, SearchOptions, WshaError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LtlError {
    #[error("proposition '{0}' labels no mode")]
    UnknownProposition(String),
    #[error(transparent)]
    Wsha(#[from] WshaError),
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error("counterexample failed its own check: {0}")]
    Certificate(String),
}

/// A run violating the formula together with its label trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LtlCounterExample {
    /// Modes of each rank class the run passes through.
    pub classes: Vec<BTreeSet<String>>,
    /// Boundary actions between consecutive classes.
    pub boundary: Vec<String>,
    pub lasso: Lasso,
    pub trace_prefix: Vec<Letter>,
    pub trace_cycle: Vec<Letter>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LtlVerdict<C> {
    /// `vacuous` when no non-Zeno run exists at all.
    Holds { vacuous: bool },
    CounterExample(Box<C>),
}

/// Rejects formulas naming propositions that label no mode.
pub fn check_alphabet(h: &HybridAutomaton, phi: &LtlFormula) -> Result<(), LtlError> {
    let alphabet: BTreeSet<&String> = h.labels.iter().flatten().collect();
    match phi.propositions().into_iter().find(|p| !alphabet.contains(p)) {
        Some(p) => Err(LtlError::UnknownProposition(p)),
        None => Ok(()),
    }
}

/// The letter read on entering each mode of a step sequence, one per action.
/// A cycle without actions stays in its mode forever and repeats its labels.
pub fn label_trace(h: &HybridAutomaton, start_mode: usize, prefix: &[Step], cycle: &[Step]) -> (Vec<Letter>, Vec<Letter>) {
    let entered = |steps: &[Step]| -> Vec<Letter> {
        steps.iter().filter_map(|s| s.action).map(|a| h.labels[h.transitions[a].to].clone()).collect()
    };
    let mut pre = vec![h.labels[start_mode].clone()];
    pre.extend(entered(prefix));
    let mut cyc = entered(cycle);
    if cyc.is_empty() {
        let last = cycle.last().map(|s| s.mode).unwrap_or(start_mode);
        cyc.push(h.labels[last].clone());
    }
    (pre, cyc)
}

struct Product {
    h: HybridAutomaton,
    /// Automaton mode and Büchi state of each product mode.
    origin: Vec<(usize, usize)>,
    /// Automaton transition behind each product transition.
    action: Vec<usize>,
    /// Modes that only stay forever.
    sink: Vec<bool>,
}

fn is_zero_rate(m: &Mode) -> bool {
    m.rate.iter().all(Rational::is_zero)
}

/// Synchronous product restricted to reachable modes. A mode `(m, q)` with a
/// zero rate whose Büchi state accepts `L(m)^ω` also gets a sink copy.
fn product(h: &HybridAutomaton, b: &BuchiAutomaton) -> Product {
    let mut index: BTreeMap<(usize, usize, bool), usize> = BTreeMap::new();
    let mut p = Product {
        h: HybridAutomaton {
            variables: h.variables.clone(),
            modes: Vec::new(),
            initial: Vec::new(),
            transitions: Vec::new(),
            labels: Vec::new(),
        },
        origin: Vec::new(),
        action: Vec::new(),
        sink: Vec::new(),
    };
    let mut queue = VecDeque::new();
    let stays = |m: usize, q: usize| is_zero_rate(&h.modes[m]) && b.accepts_constant_from(q, &h.labels[m]);
    let mut intern = |m: usize, q: usize, sink: bool, p: &mut Product, queue: &mut VecDeque<usize>| -> usize {
        *index.entry((m, q, sink)).or_insert_with(|| {
            let mode = &h.modes[m];
            let mark = if sink { "!" } else { "" };
            p.h.modes.push(Mode { name: format!("{}@{}{}", mode.name, q, mark), rate: mode.rate.clone(), invariant: mode.invariant.clone() });
            p.h.labels.push(h.labels[m].clone());
            p.origin.push((m, q));
            p.sink.push(sink);
            queue.push_back(p.origin.len() - 1);
            p.origin.len() - 1
        })
    };
    let mut initial = Vec::new();
    for &m in &h.initial {
        for q in b.initial.iter().copied().filter(|&q| b.states[q].matches(&h.labels[m])) {
            initial.push(intern(m, q, false, &mut p, &mut queue));
            if stays(m, q) {
                initial.push(intern(m, q, true, &mut p, &mut queue));
            }
        }
    }
    p.h.initial = initial;
    while let Some(s) = queue.pop_front() {
        if p.sink[s] {
            continue;
        }
        let (m, q) = p.origin[s];
        for (ti, t) in h.transitions.iter().enumerate().filter(|(_, t)| t.from == m) {
            for r in b.successors[q].iter().copied().filter(|&r| b.states[r].matches(&h.labels[t.to])) {
                let mut targets = vec![(intern(t.to, r, false, &mut p, &mut queue), "")];
                if stays(t.to, r) {
                    targets.push((intern(t.to, r, true, &mut p, &mut queue), "!"));
                }
                for (to, mark) in targets {
                    p.h.transitions.push(Transition {
                        from: s,
                        action: format!("{}@{}>{}{}", t.action, q, r, mark),
                        to,
                        guard: t.guard.clone(),
                        updates: t.updates.clone(),
                    });
                    p.action.push(ti);
                }
            }
        }
    }
    p
}

fn project_steps(p: &Product, steps: &[Step]) -> Vec<Step> {
    steps
        .iter()
        .map(|s| Step { mode: p.origin[s.mode].0, dwell: s.dwell.clone(), action: s.action.map(|a| p.action[a]) })
        .collect()
}

/// Decides whether every non-Zeno run from `v0` satisfies `phi`.
pub fn wsha_ltl_check(
    h: &HybridAutomaton,
    ranks: &RankAssignment,
    phi: &LtlFormula,
    v0: &[Rational],
    opts: SearchOptions,
    stats: &mut Stats,
) -> Result<LtlVerdict<LtlCounterExample>, LtlError> {
    check_alphabet(h, phi)?;
    let negated = LtlFormula::not(phi.clone());
    let b = ltl_to_buchi(&negated);
    let p = product(h, &b);
    if !p.h.initial.is_empty() {
        let pr = infer_ranks(&p.h).map_err(|e| LtlError::Certificate(format!("product is not weak: {e}")))?;
        let accept = |rank: usize| -> Option<Vec<usize>> {
            let modes = &pr.classes[rank].modes;
            if modes.len() == 1 && p.sink[modes[0]] {
                return Some(Vec::new());
            }
            let looping = modes.len() > 1 || p.h.transitions.iter().any(|t| t.from == modes[0] && t.to == modes[0]);
            if !looping {
                return None;
            }
            let acc = modes.iter().copied().find(|&m| b.states[p.origin[m].1].accepting)?;
            let mut visit = vec![acc];
            visit.extend(modes.iter().copied().find(|&m| m != acc));
            Some(visit)
        };
        if let SchedResult::Yes { run_type, lasso, .. } = sched_search(&p.h, &pr, v0, opts, stats, accept)? {
            let prefix = TimedRun {
                start_mode: p.origin[lasso.prefix.start_mode].0,
                start: lasso.prefix.start.clone(),
                steps: project_steps(&p, &lasso.prefix.steps),
            };
            let projected = Lasso { prefix, cycle: project_steps(&p, &lasso.cycle) };
            let (trace_prefix, trace_cycle) =
                label_trace(h, projected.prefix.start_mode, &projected.prefix.steps, &projected.cycle);
            let cex = LtlCounterExample {
                classes: run_type
                    .ranks
                    .iter()
                    .map(|&r| pr.classes[r].modes.iter().map(|&m| h.modes[p.origin[m].0].name.clone()).collect())
                    .collect(),
                boundary: run_type.actions.iter().map(|&a| h.transitions[p.action[a]].action.clone()).collect(),
                lasso: projected,
                trace_prefix,
                trace_cycle,
            };
            certify(h, &negated, &cex)?;
            return Ok(LtlVerdict::CounterExample(Box::new(cex)));
        }
    }
    let vacuous = matches!(wsha_schedulable(h, ranks, v0, opts, stats)?, SchedResult::No);
    Ok(LtlVerdict::Holds { vacuous })
}

/// Replays the lasso, checks its period and re-evaluates the trace.
pub fn certify(h: &HybridAutomaton, negated: &LtlFormula, cex: &LtlCounterExample) -> Result<(), LtlError> {
    cex.lasso.replay(h).map_err(|e| LtlError::Certificate(e.to_string()))?;
    if !cex.lasso.period().is_positive() {
        return Err(LtlError::Certificate("cycle period is not positive".into()));
    }
    if !evaluate_trace(negated, &cex.trace_prefix, &cex.trace_cycle) {
        return Err(LtlError::Certificate("trace satisfies the formula".into()));
    }
    Ok(())
}
