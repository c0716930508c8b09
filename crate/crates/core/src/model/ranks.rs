use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::Serialize;

use super::HybridAutomaton;
use crate::geometry::Polyhedron;
use crate::graph::{component_index, sccs};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankClass {
    /// Member modes, ascending by index.
    pub modes: Vec<usize>,
    /// The shared open bounded invariant of the class.
    pub safety: Polyhedron,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankAssignment {
    pub rank: Vec<usize>,
    /// `classes[r]` holds the modes of rank `r`.
    pub classes: Vec<RankClass>,
}

impl RankAssignment {
    /// Transitions whose endpoints lie in different classes.
    pub fn is_boundary(&self, h: &HybridAutomaton, t: usize) -> bool {
        let tr = &h.transitions[t];
        self.rank[tr.from] != self.rank[tr.to]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, thiserror::Error)]
#[serde(tag = "kind")]
pub enum NotWeak {
    #[error("intra-class transition {action} has a non-trivial guard")]
    IntraClassGuard { action: String },
    #[error("intra-class transition {action} has updates")]
    IntraClassUpdate { action: String },
    #[error("invariant of mode {mode} is not an open bounded polytope")]
    UnboundedOrClosedInvariant { mode: String },
    #[error("invariant of mode {mode} differs from that of {other} in the same class")]
    InvariantMismatchWithinClass { mode: String, other: String },
}

/// Derives ranks from the SCC condensation of the mode graph and checks
/// that every class is a constant-rate multi-mode system.
pub fn infer_ranks(h: &HybridAutomaton) -> Result<RankAssignment, NotWeak> {
    let n = h.modes.len();
    let comps = sccs(n, h.mode_edges());
    let comp = component_index(n, &comps);

    // Kahn's algorithm; ties broken by the smallest mode name in a component.
    let key: Vec<String> = comps
        .iter()
        .map(|c| c.iter().map(|&m| h.modes[m].name.clone()).min().unwrap())
        .collect();
    let mut indeg = vec![0usize; comps.len()];
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); comps.len()];
    for (a, b) in h.mode_edges() {
        let (ca, cb) = (comp[a], comp[b]);
        if ca != cb && !succ[ca].contains(&cb) {
            succ[ca].push(cb);
            indeg[cb] += 1;
        }
    }
    let mut ready: BinaryHeap<Reverse<(String, usize)>> =
        (0..comps.len()).filter(|&c| indeg[c] == 0).map(|c| Reverse((key[c].clone(), c))).collect();
    let mut order = Vec::new();
    while let Some(Reverse((_, c))) = ready.pop() {
        order.push(c);
        for &d in &succ[c] {
            indeg[d] -= 1;
            if indeg[d] == 0 {
                ready.push(Reverse((key[d].clone(), d)));
            }
        }
    }

    let mut rank = vec![0; n];
    let mut classes = Vec::new();
    for (r, &c) in order.iter().enumerate() {
        for &m in &comps[c] {
            rank[m] = r;
        }
        classes.push(RankClass { modes: comps[c].clone(), safety: Polyhedron::top() });
    }

    for t in &h.transitions {
        if rank[t.from] == rank[t.to] {
            if !t.guard.is_top() {
                return Err(NotWeak::IntraClassGuard { action: t.action.clone() });
            }
            if !t.updates.is_empty() {
                return Err(NotWeak::IntraClassUpdate { action: t.action.clone() });
            }
        }
    }
    for class in &mut classes {
        let first = class.modes[0];
        let inv = h.modes[first].invariant.normalized();
        for &m in &class.modes[1..] {
            if h.modes[m].invariant.normalized() != inv {
                return Err(NotWeak::InvariantMismatchWithinClass {
                    mode: h.modes[m].name.clone(),
                    other: h.modes[first].name.clone(),
                });
            }
        }
        if !inv.is_open() || !inv.is_bounded(h.dim()) {
            return Err(NotWeak::UnboundedOrClosedInvariant { mode: h.modes[first].name.clone() });
        }
        class.safety = h.modes[first].invariant.clone();
    }
    Ok(RankAssignment { rank, classes })
}

/// A CMS is a weak automaton with a single rank class.
pub fn is_cms(_h: &HybridAutomaton, ranks: &RankAssignment) -> bool {
    ranks.classes.len() == 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_model;

    const BOX: &str = r#"[{"lhs": {"x": 1}, "op": ">", "rhs": 0}, {"lhs": {"x": 1}, "op": "<", "rhs": 1}]"#;

    fn two_modes(guard: &str, updates: &str, inv_b: &str) -> HybridAutomaton {
        parse_model(&format!(
            r#"{{"variables": ["x"],
                "modes": [{{"name": "a", "rate": [1], "invariant": {BOX}}},
                          {{"name": "b", "rate": [-1], "invariant": {inv_b}}}],
                "initial": ["a"],
                "transitions": [{{"from": "a", "action": "ab", "to": "b", "guard": {guard}, "updates": {updates}}},
                                {{"from": "b", "action": "ba", "to": "a"}}]}}"#
        ))
        .unwrap()
    }

    #[test]
    fn cms_single_class() {
        let h = two_modes("[]", "[]", BOX);
        let r = infer_ranks(&h).unwrap();
        assert_eq!(r.rank, vec![0, 0]);
        assert!(is_cms(&h, &r));
    }

    #[test]
    fn guard_inside_scc_is_not_weak() {
        let h = two_modes(r#"[{"lhs": {"x": 1}, "op": "<", "rhs": 1}]"#, "[]", BOX);
        assert_eq!(infer_ranks(&h), Err(NotWeak::IntraClassGuard { action: "ab".into() }));
        let h = two_modes("[]", r#"[{"var": "x", "kind": "set", "amount": 0}]"#, BOX);
        assert_eq!(infer_ranks(&h), Err(NotWeak::IntraClassUpdate { action: "ab".into() }));
    }

    #[test]
    fn invariant_conditions() {
        let h = two_modes("[]", "[]", r#"[{"lhs": {"x": 2}, "op": "<", "rhs": 2}, {"lhs": {"x": -3}, "op": "<", "rhs": 0}]"#);
        // Same set after normalization.
        assert!(infer_ranks(&h).is_ok());
        let h = two_modes("[]", "[]", r#"[{"lhs": {"x": 1}, "op": ">", "rhs": 0}]"#);
        assert!(matches!(infer_ranks(&h), Err(NotWeak::InvariantMismatchWithinClass { .. })));
        let closed = r#"[{"lhs": {"x": 1}, "op": ">=", "rhs": 0}, {"lhs": {"x": 1}, "op": "<", "rhs": 1}]"#;
        let mut h = two_modes("[]", "[]", closed);
        h.modes[0].invariant = h.modes[1].invariant.clone();
        assert!(matches!(infer_ranks(&h), Err(NotWeak::UnboundedOrClosedInvariant { .. })));
    }

    #[test]
    fn ranks_follow_topological_order_with_name_ties() {
        let text = format!(
            r#"{{"variables": ["x"],
                "modes": [{{"name": "z", "rate": [0], "invariant": {BOX}}},
                          {{"name": "b", "rate": [0], "invariant": {BOX}}},
                          {{"name": "a", "rate": [0], "invariant": {BOX}}},
                          {{"name": "end", "rate": [0], "invariant": {BOX}}}],
                "initial": ["z"],
                "transitions": [{{"from": "z", "action": "t1", "to": "end"}},
                                {{"from": "b", "action": "t2", "to": "end"}},
                                {{"from": "a", "action": "t3", "to": "end"}}]}}"#
        );
        let h = parse_model(&text).unwrap();
        let r = infer_ranks(&h).unwrap();
        assert_eq!(r.rank, vec![2, 1, 0, 3]);
        for t in &h.transitions {
            assert!(r.rank[t.from] <= r.rank[t.to]);
        }
    }
}
