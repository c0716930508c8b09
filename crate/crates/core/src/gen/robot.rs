//! The four-region robot arena as a weak automaton.

use crate::geometry::{LinearConstraint, Polyhedron};
use crate::model::{HybridAutomaton, Valuation};
use crate::rational::{rat, Rational};

use super::{open_interval, Builder};

fn region(x: (i64, i64), y: (i64, i64)) -> Polyhedron {
    let rows: Vec<LinearConstraint> = open_interval(0, rat(x.0, 1), rat(x.1, 1))
        .into_iter()
        .chain(open_interval(1, rat(y.0, 1), rat(y.1, 1)))
        .collect();
    Polyhedron::new(rows)
}

/// Modes `m1..m7` over `x, y`; `m1, m2` live in `o1`, `m3` in `o2`, `m4` in
/// `o3` and `m5..m7` in `o4`, which is labelled `goal`. Returns the automaton,
/// the start point `(1/2, 1/2)` and a small box around `(27/5, -9/5)`.
pub fn gen_robot_example() -> (HybridAutomaton, Valuation, Polyhedron) {
    let o1 = region((0, 6), (0, 1));
    let o2 = region((2, 3), (-3, 3));
    let o3 = region((1, 7), (-2, -1));
    let o4 = region((5, 7), (-3, -1));
    let mut b = Builder::new(&["x", "y"]);
    let r = |x: Rational, y: Rational| vec![x, y];
    let m1 = b.mode("m1", r(rat(1, 1), rat(1, 2)), o1.clone());
    let m2 = b.mode("m2", r(rat(1, 1), rat(-1, 2)), o1);
    let m3 = b.mode("m3", r(rat(0, 1), rat(-1, 1)), o2);
    let m4 = b.mode("m4", r(rat(1, 1), rat(0, 1)), o3);
    let m5 = b.mode("m5", r(rat(1, 2), rat(-1, 2)), o4.clone());
    let m6 = b.mode("m6", r(rat(-1, 2), rat(-1, 2)), o4.clone());
    let m7 = b.mode("m7", r(rat(0, 1), rat(1, 1)), o4);
    for m in [m5, m6, m7] {
        b.label(m, "goal");
    }
    let top = Polyhedron::top;
    let strip = |v: usize, lo: i64, hi: i64| Polyhedron::new(open_interval(v, rat(lo, 1), rat(hi, 1)));
    b.edge(m1, m2, top(), Vec::new());
    b.edge(m2, m1, top(), Vec::new());
    b.edge(m1, m3, strip(0, 2, 3), Vec::new());
    b.edge(m3, m4, strip(1, -2, -1), Vec::new());
    b.edge(m4, m5, strip(0, 5, 7), Vec::new());
    b.edge(m5, m6, top(), Vec::new());
    b.edge(m6, m7, top(), Vec::new());
    b.edge(m7, m5, top(), Vec::new());
    let h = b.finish(&[m1]);
    let target = Polyhedron::new(
        open_interval(0, rat(53, 10), rat(55, 10)).into_iter().chain(open_interval(1, rat(-19, 10), rat(-17, 10))),
    );
    (h, vec![rat(1, 2), rat(1, 2)], target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::infer_ranks;
    use crate::stats::Stats;
    use crate::symbolic::{bounded_reach, BoundedOutcome};
    use crate::wsha::{wsha_reachable, ReachResult, SearchOptions};

    #[test]
    fn four_classes_in_order() {
        let (h, _, _) = gen_robot_example();
        let ranks = infer_ranks(&h).unwrap();
        assert_eq!(ranks.classes.len(), 4);
        assert_eq!(ranks.rank, vec![0, 0, 1, 2, 3, 3, 3]);
        assert!(h.modes[6].invariant.contains(&[rat(27, 5), rat(-9, 5)]));
    }

    #[test]
    fn target_reachable_both_ways() {
        let (h, v0, target) = gen_robot_example();
        let ranks = infer_ranks(&h).unwrap();
        let r = wsha_reachable(&h, &ranks, &v0, &target, SearchOptions::default(), &mut Stats::default()).unwrap();
        let ReachResult::Yes { run, .. } = r else { panic!("{r:?}") };
        assert!(target.contains(&run.replay(&h).unwrap().1));
        let s = bounded_reach(&h, 0, &Polyhedron::point(&v0), None, &target, 6, &mut Stats::default());
        assert!(matches!(s, BoundedOutcome::Reached { .. }), "{s:?}");
    }
}
