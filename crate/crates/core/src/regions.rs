//! Region graphs of one-variable automata: reachability, progressive cycles
//! and non-Zeno schedulability.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use crate::geometry::Polyhedron;
use crate::graph::sccs;
use crate::ltl::{check_alphabet, evaluate_trace, ltl_to_buchi, LtlError, LtlFormula, LtlVerdict};
use crate::model::{HybridAutomaton, UpdateKind};
use crate::rational::Rational;
use crate::run::{replay_steps, Lasso, ReplayError, StepBuilder, TimedRun};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RegionError {
    #[error("region analysis needs exactly one variable, found {0}")]
    NotOneVariable(usize),
    #[error("action {action} has an additive update")]
    UnsupportedUpdate { action: String },
    #[error("not a cycle: {0}")]
    NotACycle(String),
    #[error("internal error: {0}")]
    Internal(String),
}

/// Sorted distinct constants `c_1 < .. < c_m` and the `2m+1` regions they cut
/// the line into. Region `2i+1` is the point `c_i`; region `2i` is the open
/// interval between `c_(i-1)` and `c_i`, unbounded at the ends.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionSet {
    pub constants: Vec<Rational>,
}

impl RegionSet {
    pub fn new(constants: impl IntoIterator<Item = Rational>) -> Self {
        let mut c: Vec<Rational> = constants.into_iter().collect();
        c.sort();
        c.dedup();
        RegionSet { constants: c }
    }

    pub fn len(&self) -> usize {
        2 * self.constants.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_thin(&self, r: usize) -> bool {
        r % 2 == 1
    }

    pub fn lower(&self, r: usize) -> Option<&Rational> {
        if self.is_thin(r) {
            self.constants.get(r / 2)
        } else if r == 0 {
            None
        } else {
            self.constants.get(r / 2 - 1)
        }
    }

    pub fn upper(&self, r: usize) -> Option<&Rational> {
        self.constants.get(r / 2)
    }

    pub fn region_of(&self, x: &Rational) -> usize {
        match self.constants.binary_search(x) {
            Ok(i) => 2 * i + 1,
            Err(i) => 2 * i,
        }
    }

    pub fn contains(&self, r: usize, x: &Rational) -> bool {
        self.region_of(x) == r
    }

    pub fn closure_contains(&self, r: usize, x: &Rational) -> bool {
        self.lower(r).map_or(true, |l| l <= x) && self.upper(r).map_or(true, |u| x <= u)
    }

    /// A representative point.
    pub fn sample(&self, r: usize) -> Rational {
        match (self.lower(r), self.upper(r)) {
            (Some(l), Some(u)) => (l.clone() + u.clone()) / Rational::from_int(2),
            (Some(l), None) => l.clone() + Rational::one(),
            (None, Some(u)) => u.clone() - Rational::one(),
            (None, None) => Rational::zero(),
        }
    }

    /// `(c_m, inf)`; with no constants the whole line counts.
    pub fn is_right_unbounded(&self, r: usize) -> bool {
        r == self.len() - 1
    }

    pub fn is_left_unbounded(&self, r: usize) -> bool {
        r == 0
    }

    pub fn describe(&self, r: usize) -> String {
        if self.is_thin(r) {
            return format!("[{}]", self.constants[r / 2]);
        }
        let l = self.lower(r).map_or("-inf".to_string(), |c| c.to_string());
        let u = self.upper(r).map_or("inf".to_string(), |c| c.to_string());
        format!("({l}, {u})")
    }
}

/// How a walk leaves a node: letting time pass into the adjacent region,
/// taking a transition, or staying forever.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Move {
    Time,
    Discrete(usize),
    Stay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RgNode {
    pub mode: usize,
    pub region: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RgEdge {
    pub from: usize,
    pub to: usize,
    pub kind: Move,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionGraph {
    pub regions: RegionSet,
    pub nodes: Vec<RgNode>,
    pub edges: Vec<RgEdge>,
    index: HashMap<(usize, usize), usize>,
}

/// Constants `b/a` of every row `a*x ~ b` of `p`.
pub fn polyhedron_constants(p: &Polyhedron) -> Vec<Rational> {
    p.constraints
        .iter()
        .filter_map(|c| {
            let a = c.coeff(0);
            (!a.is_zero()).then(|| c.rhs.clone() / a)
        })
        .collect()
}

fn check_one_variable(h: &HybridAutomaton) -> Result<(), RegionError> {
    if h.dim() != 1 {
        return Err(RegionError::NotOneVariable(h.dim()));
    }
    for t in &h.transitions {
        if t.updates.iter().any(|u| u.kind == UpdateKind::Add) {
            return Err(RegionError::UnsupportedUpdate { action: t.action.clone() });
        }
    }
    Ok(())
}

/// Builds the region graph over the constants of `h` plus `extra`.
pub fn build_region_graph(h: &HybridAutomaton, extra: &[Rational]) -> Result<RegionGraph, RegionError> {
    check_one_variable(h)?;
    let mut consts: Vec<Rational> = extra.to_vec();
    for m in &h.modes {
        consts.extend(polyhedron_constants(&m.invariant));
    }
    for t in &h.transitions {
        consts.extend(polyhedron_constants(&t.guard));
        consts.extend(t.updates.iter().map(|u| u.amount.clone()));
    }
    let regions = RegionSet::new(consts);

    let mut order: Vec<usize> = (0..h.modes.len()).collect();
    order.sort_by(|&a, &b| h.modes[a].name.cmp(&h.modes[b].name));
    let mut nodes = Vec::new();
    for &m in &order {
        for r in 0..regions.len() {
            if h.modes[m].invariant.contains(&[regions.sample(r)]) {
                nodes.push(RgNode { mode: m, region: r });
            }
        }
    }
    let index: HashMap<(usize, usize), usize> =
        nodes.iter().enumerate().map(|(i, n)| ((n.mode, n.region), i)).collect();

    let mut edges = Vec::new();
    for (i, n) in nodes.iter().enumerate() {
        let f = &h.modes[n.mode].rate[0];
        let next = if f.is_positive() {
            Some(n.region + 1)
        } else if f.is_negative() {
            n.region.checked_sub(1)
        } else {
            None
        };
        if let Some(&j) = next.and_then(|r| index.get(&(n.mode, r))) {
            edges.push(RgEdge { from: i, to: j, kind: Move::Time });
        }
        let x = regions.sample(n.region);
        for t in h.outgoing(n.mode) {
            let tr = &h.transitions[t];
            if !tr.guard.contains(&[x.clone()]) {
                continue;
            }
            let after = tr.apply_updates(&[x.clone()]);
            let r2 = if tr.updates.is_empty() { n.region } else { regions.region_of(&after[0]) };
            if let Some(&j) = index.get(&(tr.to, r2)) {
                edges.push(RgEdge { from: i, to: j, kind: Move::Discrete(t) });
            }
        }
    }
    Ok(RegionGraph { regions, nodes, edges, index })
}

impl RegionGraph {
    pub fn node_of(&self, mode: usize, region: usize) -> Option<usize> {
        self.index.get(&(mode, region)).copied()
    }

    pub fn out_edges(&self, n: usize) -> impl Iterator<Item = &RgEdge> + '_ {
        self.edges.iter().filter(move |e| e.from == n)
    }

    pub fn has_edge(&self, from: usize, to: usize, kind: Move) -> bool {
        self.edges.iter().any(|e| e.from == from && e.to == to && e.kind == kind)
    }

    pub fn describe_node(&self, h: &HybridAutomaton, n: usize) -> String {
        let node = self.nodes[n];
        format!("{} {}", h.modes[node.mode].name, self.regions.describe(node.region))
    }

    /// Plain directed-graph text for external rendering.
    pub fn to_dot(&self, h: &HybridAutomaton) -> String {
        let mut out = String::from("digraph regions {\n");
        for n in 0..self.nodes.len() {
            let _ = writeln!(out, "  n{n} [label=\"{}\"];", self.describe_node(h, n));
        }
        for e in &self.edges {
            let label = match e.kind {
                Move::Time => "time".to_string(),
                Move::Discrete(t) => h.transitions[t].action.clone(),
                Move::Stay => "stay".to_string(),
            };
            let _ = writeln!(out, "  n{} -> n{} [label=\"{}\"];", e.from, e.to, label);
        }
        out.push_str("}\n");
        out
    }

    fn rate<'a>(&self, h: &'a HybridAutomaton, n: usize) -> &'a Rational {
        &h.modes[self.nodes[n].mode].rate[0]
    }

    /// Stays forever in `n` without Zeno behaviour.
    fn can_stay(&self, h: &HybridAutomaton, n: usize) -> bool {
        let f = self.rate(h, n);
        let r = self.nodes[n].region;
        f.is_zero()
            || (f.is_positive() && self.regions.is_right_unbounded(r))
            || (f.is_negative() && self.regions.is_left_unbounded(r))
    }
}

/// A walk: from each node, the move leading to the next entry.
pub type Walk = Vec<(usize, Move)>;

/// Dwell times for a progressive cycle. `lead` covers whole passes taken once
/// before `period` repeats forever. `exact` means the value returns to its
/// starting point after each period, so the lasso replays exactly; otherwise
/// only the dwell pattern repeats while the value drifts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DwellSchedule {
    pub lead: Vec<Rational>,
    pub period: Vec<Rational>,
    pub exact: bool,
    pub period_time: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgressivenessVerdict {
    pub progressive: bool,
    pub condition: Option<u8>,
    pub schedule: Option<DwellSchedule>,
}

fn validate_cycle(rg: &RegionGraph, cycle: &[(usize, Move)]) -> Result<(), RegionError> {
    if cycle.is_empty() {
        return Err(RegionError::NotACycle("empty walk".into()));
    }
    for (i, &(n, mv)) in cycle.iter().enumerate() {
        if n >= rg.nodes.len() {
            return Err(RegionError::NotACycle(format!("unknown node {n}")));
        }
        let next = cycle[(i + 1) % cycle.len()].0;
        let ok = match mv {
            Move::Stay => cycle.len() == 1,
            kind => rg.has_edge(n, next, kind),
        };
        if !ok {
            return Err(RegionError::NotACycle(format!("no {mv:?} edge from node {n} to node {next}")));
        }
    }
    Ok(())
}

/// The progressiveness condition a closed walk satisfies, if any.
pub fn cycle_condition(h: &HybridAutomaton, rg: &RegionGraph, cycle: &[(usize, Move)]) -> Option<u8> {
    let rs = &rg.regions;
    let rates: Vec<&Rational> = cycle.iter().map(|&(n, _)| rg.rate(h, n)).collect();
    let regions: Vec<usize> = cycle.iter().map(|&(n, _)| rg.nodes[n].region).collect();
    let pos = rates.iter().any(|f| f.is_positive());
    let neg = rates.iter().any(|f| f.is_negative());
    if rates.iter().any(|f| f.is_zero()) {
        return Some(1);
    }
    if pos && regions.iter().all(|&r| rs.is_right_unbounded(r)) {
        return Some(2);
    }
    if neg && regions.iter().all(|&r| rs.is_left_unbounded(r)) {
        return Some(3);
    }
    let thin_to_thick = cycle.iter().enumerate().any(|(i, &(n, mv))| {
        let next = cycle[(i + 1) % cycle.len()].0;
        mv == Move::Time && rs.is_thin(rg.nodes[n].region) && !rs.is_thin(rg.nodes[next].region)
    });
    if thin_to_thick {
        return Some(4);
    }
    if pos && neg && !rs.is_thin(regions[0]) && regions.iter().all(|&r| r == regions[0]) {
        return Some(5);
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct PassState {
    x: Rational,
    up: bool,
}

/// Levels the value alternates between inside a bounded thick region.
fn oscillation_levels(rs: &RegionSet, r: usize) -> Option<(Rational, Rational)> {
    let (a, b) = (rs.lower(r)?, rs.upper(r)?);
    let w = b.clone() - a.clone();
    Some((a.clone() + w.clone() / Rational::from_int(4), a.clone() + w / Rational::from_int(2)))
}

/// Time needed to move from a boundary of thick region `r` to an interior point.
fn inward(rs: &RegionSet, r: usize, x: &Rational, f: &Rational) -> Result<Rational, String> {
    let target = if f.is_positive() && rs.lower(r) == Some(x) {
        match rs.upper(r) {
            Some(u) => (x.clone() + u.clone()) / Rational::from_int(2),
            None => x.clone() + Rational::one(),
        }
    } else if f.is_negative() && rs.upper(r) == Some(x) {
        match rs.lower(r) {
            Some(l) => (x.clone() + l.clone()) / Rational::from_int(2),
            None => x.clone() - Rational::one(),
        }
    } else {
        return Err(format!("value {x} cannot move into region {}", rs.describe(r)));
    };
    Ok((target - x.clone()) / f.clone())
}

/// Chooses dwell times along `walk` from `st`, for progressiveness condition
/// `cond` (0 for plain traversal), and advances `st` past the walk.
fn walk_dwells(
    h: &HybridAutomaton,
    rg: &RegionGraph,
    walk: &[(usize, Move)],
    cond: u8,
    st: &mut PassState,
) -> Result<Vec<Rational>, String> {
    let rs = &rg.regions;
    let mut out = Vec::with_capacity(walk.len());
    for &(n, mv) in walk {
        let r = rg.nodes[n].region;
        let f = rg.rate(h, n);
        let x = st.x.clone();
        let d = match mv {
            Move::Time if rs.is_thin(r) => Rational::zero(),
            Move::Time => {
                let b = if f.is_positive() { rs.upper(r) } else { rs.lower(r) };
                let b = b.ok_or("time edge out of an unbounded region")?;
                (b.clone() - x) / f.clone()
            }
            Move::Discrete(_) | Move::Stay => {
                let base = if rs.contains(r, &x) { Rational::zero() } else { inward(rs, r, &x, f)? };
                let unit = || Rational::max(base.clone(), Rational::one());
                match cond {
                    1 if f.is_zero() => Rational::one(),
                    2 if f.is_positive() => unit(),
                    3 if f.is_negative() => unit(),
                    5 => {
                        let (lo, hi) = oscillation_levels(rs, r).ok_or("oscillation needs a bounded region")?;
                        if st.up && f.is_positive() {
                            st.up = false;
                            (hi - x) / f.clone()
                        } else if !st.up && f.is_negative() {
                            st.up = true;
                            (x - lo) / -f.clone()
                        } else {
                            base
                        }
                    }
                    _ => base,
                }
            }
        };
        st.x = st.x.clone() + f.clone() * d.clone();
        if let Move::Discrete(t) = mv {
            st.x = h.transitions[t].apply_updates(&[st.x.clone()]).remove(0);
        }
        out.push(d);
    }
    Ok(out)
}

/// Checks that `dwells` instantiate `walk` from value `x0`, ending at node
/// `end`: every dwell stays inside its region, time moves cross into the
/// adjacent region, and transitions respect guards, updates and invariants.
/// Returns the value on reaching `end`.
pub fn check_walk(
    h: &HybridAutomaton,
    rg: &RegionGraph,
    walk: &[(usize, Move)],
    end: usize,
    x0: &Rational,
    dwells: &[Rational],
) -> Result<Rational, String> {
    let rs = &rg.regions;
    if dwells.len() != walk.len() {
        return Err("dwell count does not match the walk".into());
    }
    let mut x = x0.clone();
    for (i, (&(n, mv), d)) in walk.iter().zip(dwells).enumerate() {
        let node = rg.nodes[n];
        let r = node.region;
        let f = &h.modes[node.mode].rate[0];
        let next = walk.get(i + 1).map_or(end, |e| e.0);
        if !rs.closure_contains(r, &x) {
            return Err(format!("step {i}: value {x} outside {}", rs.describe(r)));
        }
        if d.is_negative() {
            return Err(format!("step {i}: negative dwell"));
        }
        let y = x.clone() + f.clone() * d.clone();
        if d.is_positive() {
            let inside = if f.is_zero() {
                rs.contains(r, &x)
            } else {
                let mid = (x.clone() + y.clone()) / Rational::from_int(2);
                rs.contains(r, &mid) && rs.closure_contains(r, &y)
            };
            if !inside {
                return Err(format!("step {i}: dwell {d} leaves {}", rs.describe(r)));
            }
        }
        x = match mv {
            Move::Time => {
                let nn = rg.nodes[next];
                let adjacent = if f.is_positive() { nn.region == r + 1 } else { f.is_negative() && nn.region + 1 == r };
                let lands = (rs.contains(r, &y) || rs.contains(nn.region, &y)) && rs.closure_contains(nn.region, &y);
                if nn.mode != node.mode || !adjacent || !lands {
                    return Err(format!("step {i}: time move ends at {y}"));
                }
                y
            }
            Move::Discrete(t) => {
                let tr = &h.transitions[t];
                if !rs.contains(r, &y) || tr.from != node.mode || !tr.guard.contains(&[y.clone()]) {
                    return Err(format!("step {i}: {} not enabled at {y}", tr.action));
                }
                let z = tr.apply_updates(&[y]).remove(0);
                let nn = rg.nodes[next];
                if nn.mode != tr.to || !rs.contains(nn.region, &z) || !h.modes[tr.to].invariant.contains(&[z.clone()]) {
                    return Err(format!("step {i}: {} lands outside the next node", tr.action));
                }
                z
            }
            Move::Stay => {
                if !rs.contains(r, &y) || next != n {
                    return Err(format!("step {i}: stay leaves {}", rs.describe(r)));
                }
                y
            }
        };
    }
    Ok(x)
}

/// Classifies a closed walk entered with value `entry` (a point of the first
/// node's region or its boundary) and, when progressive, builds a dwell
/// schedule whose passes are checked by `check_walk`.
pub fn classify_cycle(
    h: &HybridAutomaton,
    rg: &RegionGraph,
    cycle: &[(usize, Move)],
    entry: &Rational,
) -> Result<ProgressivenessVerdict, RegionError> {
    check_one_variable(h)?;
    validate_cycle(rg, cycle)?;
    let r0 = rg.nodes[cycle[0].0].region;
    if !rg.regions.closure_contains(r0, entry) {
        return Err(RegionError::NotACycle(format!("entry value {entry} is not at the first node")));
    }
    let Some(cond) = cycle_condition(h, rg, cycle) else {
        return Ok(ProgressivenessVerdict { progressive: false, condition: None, schedule: None });
    };
    let internal = RegionError::Internal;
    let up = match oscillation_levels(&rg.regions, r0) {
        Some((_, hi)) => entry < &hi,
        None => true,
    };
    let mut states = vec![PassState { x: entry.clone(), up }];
    let mut passes = Vec::new();
    for _ in 0..3 {
        let mut st = states.last().unwrap().clone();
        let start = st.x.clone();
        let d = walk_dwells(h, rg, cycle, cond, &mut st).map_err(internal)?;
        let end = check_walk(h, rg, cycle, cycle[0].0, &start, &d).map_err(internal)?;
        if end != st.x {
            return Err(RegionError::Internal("schedule and check disagree".into()));
        }
        passes.push(d);
        states.push(st);
    }
    let cat = |ps: &[Vec<Rational>]| ps.concat();
    let (lead, period, exact) = if states[0] == states[1] {
        (Vec::new(), passes[0].clone(), true)
    } else if states[1] == states[2] {
        (passes[0].clone(), passes[1].clone(), true)
    } else if states[1] == states[3] {
        (passes[0].clone(), cat(&passes[1..3]), true)
    } else if states[2] == states[3] {
        (cat(&passes[0..2]), passes[2].clone(), true)
    } else if passes[1] == passes[2] {
        (passes[0].clone(), passes[1].clone(), false)
    } else {
        return Err(RegionError::Internal("no periodic dwell pattern".into()));
    };
    let period_time: Rational = period.iter().cloned().sum();
    if !period_time.is_positive() {
        return Err(RegionError::Internal("period without elapsed time".into()));
    }
    Ok(ProgressivenessVerdict {
        progressive: true,
        condition: Some(cond),
        schedule: Some(DwellSchedule { lead, period, exact, period_time }),
    })
}

fn steps_for(rg: &RegionGraph, walk: &[(usize, Move)], dwells: &[Rational], b: &mut StepBuilder) {
    for (&(n, mv), d) in walk.iter().zip(dwells) {
        let m = rg.nodes[n].mode;
        b.dwell(m, d.clone());
        if let Move::Discrete(t) = mv {
            b.take(m, t);
        }
    }
}

fn start_node(h: &HybridAutomaton, rg: &RegionGraph, mode: usize, x0: &Rational) -> Option<usize> {
    if !h.modes[mode].invariant.contains(&[x0.clone()]) {
        return None;
    }
    rg.node_of(mode, rg.regions.region_of(x0))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RegionReach {
    Yes { path: Walk, run: TimedRun },
    No,
}

/// Searches the region graph from `(mode, x0)` for a node whose region meets
/// `target`. The target's endpoints must be among the graph's constants.
pub fn region_reachable(
    h: &HybridAutomaton,
    rg: &RegionGraph,
    mode: usize,
    x0: &Rational,
    target: &Polyhedron,
) -> Result<RegionReach, RegionError> {
    check_one_variable(h)?;
    let Some(s) = start_node(h, rg, mode, x0) else { return Ok(RegionReach::No) };
    let hit = |n: usize| target.contains(&[rg.regions.sample(rg.nodes[n].region)]);
    let mut prev: Vec<Option<(usize, Move)>> = vec![None; rg.nodes.len()];
    let mut seen = vec![false; rg.nodes.len()];
    let mut queue = VecDeque::from([s]);
    seen[s] = true;
    while let Some(u) = queue.pop_front() {
        if hit(u) {
            let mut path = Vec::new();
            let mut cur = u;
            while let Some((p, mv)) = prev[cur] {
                path.push((p, mv));
                cur = p;
            }
            path.reverse();
            let run = reach_run(h, rg, &path, u, mode, x0).map_err(RegionError::Internal)?;
            let (_, end) = run.replay(h).map_err(|e| RegionError::Internal(e.to_string()))?;
            if !target.contains(&end) {
                return Err(RegionError::Internal("witness misses the target".into()));
            }
            return Ok(RegionReach::Yes { path, run });
        }
        for e in rg.out_edges(u) {
            if !seen[e.to] {
                seen[e.to] = true;
                prev[e.to] = Some((u, e.kind));
                queue.push_back(e.to);
            }
        }
    }
    Ok(RegionReach::No)
}

fn reach_run(
    h: &HybridAutomaton,
    rg: &RegionGraph,
    path: &[(usize, Move)],
    end: usize,
    mode: usize,
    x0: &Rational,
) -> Result<TimedRun, String> {
    let mut st = PassState { x: x0.clone(), up: true };
    let d = walk_dwells(h, rg, path, 0, &mut st)?;
    check_walk(h, rg, path, end, x0, &d)?;
    let mut b = StepBuilder::default();
    steps_for(rg, path, &d, &mut b);
    let r = rg.nodes[end].region;
    if !rg.regions.contains(r, &st.x) {
        b.dwell(rg.nodes[end].mode, inward(&rg.regions, r, &st.x, rg.rate(h, end))?);
    }
    Ok(TimedRun { start_mode: mode, start: vec![x0.clone()], steps: b.steps })
}

/// Tracks an ω-word over mode labels alongside the region graph.
pub trait Observer {
    fn start(&self, letter: &BTreeSet<String>) -> Vec<usize>;
    fn step(&self, q: usize, letter: &BTreeSet<String>) -> Vec<usize>;
    fn accepting(&self, q: usize) -> bool;
}

/// Accepts every word.
pub struct AcceptAll;

impl Observer for AcceptAll {
    fn start(&self, _: &BTreeSet<String>) -> Vec<usize> {
        vec![0]
    }
    fn step(&self, _: usize, _: &BTreeSet<String>) -> Vec<usize> {
        vec![0]
    }
    fn accepting(&self, _: usize) -> bool {
        true
    }
}

/// A non-Zeno run: the lasso's cycle repeats forever, with `trace` giving the
/// mode labels sampled at mode entries for the prefix and the cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionLasso {
    pub lasso: Lasso,
    pub exact: bool,
    pub condition: u8,
    pub prefix_path: Walk,
    pub cycle_path: Walk,
    pub trace_prefix: Vec<BTreeSet<String>>,
    pub trace_cycle: Vec<BTreeSet<String>>,
}

impl RegionLasso {
    /// Exact lassos must return to their start; drifting ones are replayed
    /// for `periods` repetitions of the cycle.
    pub fn verify(&self, h: &HybridAutomaton, periods: usize) -> Result<(), ReplayError> {
        if self.exact {
            return self.lasso.replay(h).map(|_| ());
        }
        let (mut m, mut v) = self.lasso.prefix.replay(h)?;
        if !self.lasso.period().is_positive() {
            return Err(ReplayError { step: self.lasso.prefix.steps.len(), message: "cycle period is not positive".into() });
        }
        for _ in 0..periods {
            (m, v) = replay_steps(h, m, v, &self.lasso.cycle, self.lasso.prefix.steps.len())?;
        }
        Ok(())
    }
}

struct Product {
    nodes: Vec<(usize, usize)>,
    edges: Vec<(usize, usize, Move)>,
    parent: Vec<Option<(usize, Move)>>,
}

fn letter<'a>(h: &'a HybridAutomaton, rg: &RegionGraph, n: usize) -> &'a BTreeSet<String> {
    &h.labels[rg.nodes[n].mode]
}

fn build_product<O: Observer>(h: &HybridAutomaton, rg: &RegionGraph, start: usize, obs: &O) -> Product {
    let mut p = Product { nodes: Vec::new(), edges: Vec::new(), parent: Vec::new() };
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut queue = VecDeque::new();
    let mut add = |p: &mut Product, key: (usize, usize), parent: Option<(usize, Move)>, queue: &mut VecDeque<usize>| {
        *index.entry(key).or_insert_with(|| {
            p.nodes.push(key);
            p.parent.push(parent);
            queue.push_back(p.nodes.len() - 1);
            p.nodes.len() - 1
        })
    };
    let mut qs = obs.start(letter(h, rg, start));
    qs.sort_unstable();
    qs.dedup();
    for q in qs {
        add(&mut p, (start, q), None, &mut queue);
    }
    while let Some(i) = queue.pop_front() {
        let (n, q) = p.nodes[i];
        for e in rg.out_edges(n) {
            let mut next = match e.kind {
                Move::Time => vec![q],
                _ => obs.step(q, letter(h, rg, e.to)),
            };
            next.sort_unstable();
            next.dedup();
            for q2 in next {
                let j = add(&mut p, (e.to, q2), Some((i, e.kind)), &mut queue);
                p.edges.push((i, j, e.kind));
            }
        }
    }
    p
}

/// Shortest walk from `from` to `to` inside `allowed`; non-empty when
/// `from == to` only if `nonempty`.
fn walk_between(p: &Product, from: usize, to: usize, allowed: &[bool], nonempty: bool) -> Option<Walk> {
    if from == to && !nonempty {
        return Some(Vec::new());
    }
    let n = p.nodes.len();
    let mut prev: Vec<Option<(usize, Move)>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    for &(a, b, mv) in p.edges.iter().filter(|e| e.0 == from && allowed[e.1]) {
        if !seen[b] {
            seen[b] = true;
            prev[b] = Some((a, mv));
            queue.push_back(b);
        }
    }
    while let Some(u) = queue.pop_front() {
        if u == to {
            let mut out = Vec::new();
            let mut cur = u;
            loop {
                let (q, mv) = prev[cur].unwrap();
                out.push((q, mv));
                if q == from {
                    break;
                }
                cur = q;
            }
            out.reverse();
            return Some(out);
        }
        for &(_, b, mv) in p.edges.iter().filter(|e| e.0 == u && allowed[e.1]) {
            if !seen[b] {
                seen[b] = true;
                prev[b] = Some((u, mv));
                queue.push_back(b);
            }
        }
    }
    None
}

/// Closed walk through `waypoints` in order and back to the first.
fn closed_walk(p: &Product, waypoints: &[usize], allowed: &[bool]) -> Option<Walk> {
    let mut out = Vec::new();
    for i in 0..waypoints.len() {
        let (a, b) = (waypoints[i], waypoints[(i + 1) % waypoints.len()]);
        out.extend(walk_between(p, a, b, allowed, false)?);
    }
    if out.is_empty() {
        out = walk_between(p, waypoints[0], waypoints[0], allowed, true)?;
    }
    Some(out)
}

/// Finds a progressive cycle through an accepting product node, trying
/// conditions 1 to 5 on product components, then stays.
fn find_cycle<O: Observer>(h: &HybridAutomaton, rg: &RegionGraph, p: &Product, obs: &O) -> Option<Walk> {
    let rs = &rg.regions;
    let n = p.nodes.len();
    let rate = |i: usize| rg.rate(h, p.nodes[i].0);
    let region = |i: usize| rg.nodes[p.nodes[i].0].region;
    let acc = |i: usize| obs.accepting(p.nodes[i].1);

    let mut filters: Vec<(u8, Vec<bool>)> = vec![
        (1, vec![true; n]),
        (2, (0..n).map(|i| rs.is_right_unbounded(region(i))).collect()),
        (3, (0..n).map(|i| rs.is_left_unbounded(region(i))).collect()),
        (4, vec![true; n]),
    ];
    for r in (0..rs.len()).filter(|&r| !rs.is_thin(r) && oscillation_levels(rs, r).is_some()) {
        filters.push((5, (0..n).map(|i| region(i) == r).collect()));
    }
    for (cond, allowed) in &filters {
        let edges = p.edges.iter().filter(|e| allowed[e.0] && allowed[e.1]).map(|e| (e.0, e.1));
        for comp in sccs(n, edges) {
            if !allowed[comp[0]] {
                continue;
            }
            let inside: Vec<bool> = {
                let mut v = vec![false; n];
                comp.iter().for_each(|&i| v[i] = true);
                v
            };
            let internal = p.edges.iter().any(|e| inside[e.0] && inside[e.1]);
            if !internal {
                continue;
            }
            let Some(&a) = comp.iter().find(|&&i| acc(i)) else { continue };
            let walk = match cond {
                1 => comp.iter().find(|&&i| rate(i).is_zero()).and_then(|&z| closed_walk(p, &[a, z], &inside)),
                2 => comp.iter().find(|&&i| rate(i).is_positive()).and_then(|&z| closed_walk(p, &[a, z], &inside)),
                3 => comp.iter().find(|&&i| rate(i).is_negative()).and_then(|&z| closed_walk(p, &[a, z], &inside)),
                4 => p
                    .edges
                    .iter()
                    .find(|e| {
                        e.2 == Move::Time && inside[e.0] && inside[e.1] && rs.is_thin(region(e.0)) && !rs.is_thin(region(e.1))
                    })
                    .and_then(|&(u, v, mv)| {
                        let mut w = walk_between(p, a, u, &inside, false)?;
                        w.push((u, mv));
                        w.extend(walk_between(p, v, a, &inside, false)?);
                        Some(w)
                    }),
                _ => {
                    let pos = comp.iter().find(|&&i| rate(i).is_positive());
                    let neg = comp.iter().find(|&&i| rate(i).is_negative());
                    match (pos, neg) {
                        (Some(&x), Some(&y)) => closed_walk(p, &[a, x, y], &inside),
                        _ => None,
                    }
                }
            };
            if walk.is_some() {
                return walk;
            }
        }
    }
    None
}

/// Stay-forever cycle: a stayable node whose observer state can accept the
/// node's label repeated forever. Returns the product node to stay in.
fn find_stay<O: Observer>(h: &HybridAutomaton, rg: &RegionGraph, p: &Product, obs: &O) -> Option<usize> {
    for i in 0..p.nodes.len() {
        let (n, q) = p.nodes[i];
        if !rg.can_stay(h, n) {
            continue;
        }
        let l = letter(h, rg, n);
        // observer states reachable from q reading l; accepting ones on an l-cycle
        let mut reach: Vec<usize> = Vec::new();
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([q]);
        seen.insert(q);
        while let Some(s) = queue.pop_front() {
            reach.push(s);
            for t in obs.step(s, l) {
                if seen.insert(t) {
                    queue.push_back(t);
                }
            }
        }
        for &s in &reach {
            if !obs.accepting(s) {
                continue;
            }
            let mut seen2 = BTreeSet::new();
            let mut stack = obs.step(s, l);
            while let Some(t) = stack.pop() {
                if t == s {
                    return Some(i);
                }
                if seen2.insert(t) {
                    stack.extend(obs.step(t, l));
                }
            }
        }
    }
    None
}

fn product_prefix(p: &Product, to: usize) -> Walk {
    let mut out = Vec::new();
    let mut cur = to;
    while let Some((q, mv)) = p.parent[cur] {
        out.push((q, mv));
        cur = q;
    }
    out.reverse();
    out
}

fn trace_of(h: &HybridAutomaton, rg: &RegionGraph, walk: &[(usize, Move)], end: usize) -> Vec<BTreeSet<String>> {
    let mut out = Vec::new();
    for (i, &(_, mv)) in walk.iter().enumerate() {
        if let Move::Discrete(_) = mv {
            let next = walk.get(i + 1).map_or(end, |e| e.0);
            out.push(letter(h, rg, next).clone());
        }
    }
    out
}

/// Searches for a non-Zeno run from `(mode, x0)` whose label trace the
/// observer accepts.
pub fn accepting_lasso<O: Observer>(
    h: &HybridAutomaton,
    rg: &RegionGraph,
    mode: usize,
    x0: &Rational,
    obs: &O,
) -> Result<Option<RegionLasso>, RegionError> {
    check_one_variable(h)?;
    let Some(s) = start_node(h, rg, mode, x0) else { return Ok(None) };
    let p = build_product(h, rg, s, obs);
    let project = |w: &[(usize, Move)]| -> Walk { w.iter().map(|&(i, mv)| (p.nodes[i].0, mv)).collect() };
    let (prefix_p, cycle_p) = if let Some(w) = find_cycle(h, rg, &p, obs) {
        (product_prefix(&p, w[0].0), w)
    } else if let Some(i) = find_stay(h, rg, &p, obs) {
        (product_prefix(&p, i), vec![(i, Move::Stay)])
    } else {
        return Ok(None);
    };
    let prefix = project(&prefix_p);
    let cycle = project(&cycle_p);
    let internal = RegionError::Internal;

    let entry_node = cycle[0].0;
    let mut st = PassState { x: x0.clone(), up: true };
    let pre_d = walk_dwells(h, rg, &prefix, 0, &mut st).map_err(internal)?;
    let entry = check_walk(h, rg, &prefix, entry_node, x0, &pre_d).map_err(internal)?;
    let verdict = classify_cycle(h, rg, &cycle, &entry)?;
    let (Some(condition), Some(sched)) = (verdict.condition, verdict.schedule) else {
        return Err(RegionError::Internal("search returned a non-progressive cycle".into()));
    };

    let passes = |d: &[Rational]| -> Walk { cycle.iter().copied().cycle().take(d.len()).collect() };
    let lead = passes(&sched.lead);
    let period = passes(&sched.period);
    let mut b = StepBuilder::default();
    steps_for(rg, &prefix, &pre_d, &mut b);
    steps_for(rg, &lead, &sched.lead, &mut b);
    let mut c = StepBuilder::default();
    steps_for(rg, &period, &sched.period, &mut c);
    let lasso = Lasso { prefix: TimedRun { start_mode: mode, start: vec![x0.clone()], steps: b.steps }, cycle: c.steps };

    let mut full_prefix = prefix.clone();
    full_prefix.extend(lead.iter().copied());
    let mut trace_prefix = vec![letter(h, rg, s).clone()];
    trace_prefix.extend(trace_of(h, rg, &full_prefix, entry_node));
    let trace_cycle = if cycle[0].1 == Move::Stay {
        vec![letter(h, rg, entry_node).clone()]
    } else {
        trace_of(h, rg, &period, entry_node)
    };
    let out = RegionLasso {
        lasso,
        exact: sched.exact,
        condition,
        prefix_path: full_prefix,
        cycle_path: period,
        trace_prefix,
        trace_cycle,
    };
    out.verify(h, 3).map_err(|e| RegionError::Internal(e.to_string()))?;
    Ok(Some(out))
}

/// Decides whether a non-Zeno run from `(mode, x0)` exists.
pub fn region_schedulable(
    h: &HybridAutomaton,
    rg: &RegionGraph,
    mode: usize,
    x0: &Rational,
) -> Result<Option<RegionLasso>, RegionError> {
    accepting_lasso(h, rg, mode, x0, &AcceptAll)
}

/// LTL over non-Zeno runs of a one-variable automaton from `(mode, x0)`.
pub fn onevar_ltl_check(
    h: &HybridAutomaton,
    phi: &LtlFormula,
    mode: usize,
    x0: &Rational,
) -> Result<LtlVerdict<RegionLasso>, LtlError> {
    check_alphabet(h, phi)?;
    let rg = build_region_graph(h, std::slice::from_ref(x0))?;
    let negated = LtlFormula::not(phi.clone());
    let b = ltl_to_buchi(&negated);
    if let Some(l) = accepting_lasso(h, &rg, mode, x0, &b)? {
        l.verify(h, 3).map_err(|e| LtlError::Certificate(e.to_string()))?;
        if !evaluate_trace(&negated, &l.trace_prefix, &l.trace_cycle) {
            return Err(LtlError::Certificate("trace satisfies the formula".into()));
        }
        return Ok(LtlVerdict::CounterExample(Box::new(l)));
    }
    let vacuous = region_schedulable(h, &rg, mode, x0)?.is_none();
    Ok(LtlVerdict::Holds { vacuous })
}
