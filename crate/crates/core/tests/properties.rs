//! Cross-module invariants checked on generated inputs.

use proptest::prelude::*;
use weakha::gen::gen_robot_example;
use weakha::geometry::{LinearConstraint, Polyhedron, Relation};
use weakha::ltl::{evaluate_trace, ltl_to_buchi, parse_ltl, wsha_ltl_check, Letter, LtlFormula, LtlVerdict};
use weakha::model::{infer_ranks, parse_model, to_model_text, HybridAutomaton, Mode, Transition, Update, UpdateKind};
use weakha::regions::RegionSet;
use weakha::stats::Stats;
use weakha::wsha::{wsha_reachable, wsha_schedulable, ReachResult, SchedResult, SearchOptions};
use weakha::Rational;

fn formula(props: &'static [&'static str]) -> impl Strategy<Value = LtlFormula> {
    let leaf = prop_oneof![
        Just(LtlFormula::True),
        Just(LtlFormula::False),
        proptest::sample::select(props).prop_map(LtlFormula::prop),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(LtlFormula::not),
            inner.clone().prop_map(LtlFormula::next),
            inner.clone().prop_map(LtlFormula::eventually),
            inner.clone().prop_map(LtlFormula::always),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| LtlFormula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| LtlFormula::or(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| LtlFormula::implies(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| LtlFormula::until(a, b)),
        ]
    })
}

fn letter() -> impl Strategy<Value = Letter> {
    (any::<bool>(), any::<bool>()).prop_map(|(p, q)| {
        let mut l = Letter::new();
        if p {
            l.insert("p".into());
        }
        if q {
            l.insert("q".into());
        }
        l
    })
}

fn word(min: usize, max: usize) -> impl Strategy<Value = Vec<Letter>> {
    proptest::collection::vec(letter(), min..=max)
}

fn small() -> impl Strategy<Value = Rational> {
    (-6i64..=6, 1i64..=3).prop_map(|(n, d)| Rational::new(n, d))
}

/// A weak automaton: a chain of 1-3 classes, each a pair of modes or a
/// looping single mode in a shared open box, joined by guarded boundary
/// transitions with optional updates.
fn wsha() -> impl Strategy<Value = (HybridAutomaton, Vec<Rational>)> {
    let class = (
        proptest::collection::vec(-2i64..=2, 2),
        proptest::collection::vec(-2i64..=2, 2),
        any::<bool>(),
        -4i64..=0,
        1i64..=4,
    );
    let boundary = (0usize..2, -4i64..=4, any::<bool>(), -2i64..=2);
    (proptest::collection::vec(class, 1..=3), proptest::collection::vec(boundary, 2))
        .prop_map(|(classes, boundaries)| {
            let mut modes = Vec::new();
            let mut transitions = Vec::new();
            let mut firsts = Vec::new();
            for (c, (r0, r1, pair, lo, hi)) in classes.iter().enumerate() {
                let safety = Polyhedron::new((0..2).flat_map(|v| {
                    [
                        LinearConstraint::bound(v, Relation::Gt, Rational::from_int(*lo)),
                        LinearConstraint::bound(v, Relation::Lt, Rational::from_int(*hi)),
                    ]
                }));
                let rate = |r: &Vec<i64>| r.iter().map(|&x| Rational::from_int(x)).collect();
                let first = modes.len();
                firsts.push(first);
                modes.push(Mode { name: format!("c{c}a"), rate: rate(r0), invariant: safety.clone() });
                let top = Polyhedron::top();
                if *pair {
                    modes.push(Mode { name: format!("c{c}b"), rate: rate(r1), invariant: safety });
                    let loop_edge = |from, to, action: &str| Transition { from, to, action: action.into(), guard: top.clone(), updates: vec![] };
                    transitions.push(loop_edge(first, first + 1, &format!("c{c}ab")));
                    transitions.push(loop_edge(first + 1, first, &format!("c{c}ba")));
                } else {
                    transitions.push(Transition { from: first, to: first, action: format!("c{c}aa"), guard: top, updates: vec![] });
                }
            }
            for c in 1..firsts.len() {
                let (var, k, add, amount) = boundaries[(c - 1) % boundaries.len()];
                let guard = Polyhedron::new([LinearConstraint::bound(var, Relation::Ge, Rational::from_int(k))]);
                let kind = if add { UpdateKind::Add } else { UpdateKind::Set };
                transitions.push(Transition {
                    from: firsts[c - 1],
                    to: firsts[c],
                    action: format!("up{c}"),
                    guard,
                    updates: vec![Update { var: 1 - var, kind, amount: Rational::from_int(amount) }],
                });
            }
            let (lo, hi) = (classes[0].3, classes[0].4);
            let mid = Rational::new(lo + hi, 2);
            let h = HybridAutomaton {
                variables: vec!["x".into(), "y".into()],
                labels: vec![Default::default(); modes.len()],
                modes,
                initial: vec![0],
                transitions,
            };
            (h, vec![mid.clone(), mid])
        })
}

fn robot_with_loop() -> (HybridAutomaton, Vec<Rational>) {
    let (mut h, v0, _) = gen_robot_example();
    h.modes[0].rate = vec![Rational::from_int(1), Rational::zero()];
    h.modes[1].rate = vec![Rational::from_int(-1), Rational::zero()];
    (h, v0)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn formulas_round_trip(f in formula(&["p", "q", "goal"])) {
        prop_assert_eq!(parse_ltl(&f.to_string()).unwrap(), f);
    }

    #[test]
    fn unrolling_a_lasso_keeps_its_meaning(f in formula(&["p", "q"]), pre in word(0, 3), cyc in word(1, 3)) {
        let v = evaluate_trace(&f, &pre, &cyc);
        let mut longer = pre.clone();
        longer.extend(cyc.iter().cloned());
        prop_assert_eq!(evaluate_trace(&f, &longer, &cyc), v);
        let doubled = [cyc.clone(), cyc.clone()].concat();
        prop_assert_eq!(evaluate_trace(&f, &pre, &doubled), v);
        let rotated = [cyc[1..].to_vec(), vec![cyc[0].clone()]].concat();
        prop_assert_eq!(evaluate_trace(&f, &[pre.clone(), vec![cyc[0].clone()]].concat(), &rotated), v);
    }

    #[test]
    fn buchi_membership_matches_evaluation(f in formula(&["p", "q"]), pre in word(0, 6), cyc in word(1, 6)) {
        prop_assert_eq!(ltl_to_buchi(&f).accepts(&pre, &cyc), evaluate_trace(&f, &pre, &cyc));
    }

    #[test]
    fn region_count_is_two_m_plus_one(cs in proptest::collection::vec(small(), 0..8)) {
        let distinct: std::collections::BTreeSet<Rational> = cs.iter().cloned().collect();
        prop_assert_eq!(RegionSet::new(cs).len(), 2 * distinct.len() + 1);
    }

    #[test]
    fn model_text_round_trips((h, _) in wsha()) {
        let text = to_model_text(&h);
        let back = parse_model(&text).unwrap();
        prop_assert_eq!(&back, &h);
        prop_assert_eq!(infer_ranks(&back).unwrap(), infer_ranks(&h).unwrap());
    }

    #[test]
    fn wsha_witnesses_replay((h, v0) in wsha(), lo in -4i64..=4, w in 0i64..=3) {
        let ranks = infer_ranks(&h).unwrap();
        let target = Polyhedron::new([
            LinearConstraint::bound(0, Relation::Ge, Rational::from_int(lo)),
            LinearConstraint::bound(0, Relation::Le, Rational::from_int(lo + w)),
        ]);
        let opts = SearchOptions::default();
        if let ReachResult::Yes { run, .. } = wsha_reachable(&h, &ranks, &v0, &target, opts, &mut Stats::default()).unwrap() {
            let (_, end) = run.replay(&h).unwrap();
            prop_assert!(target.contains(&end));
        }
        if let SchedResult::Yes { lasso, .. } = wsha_schedulable(&h, &ranks, &v0, opts, &mut Stats::default()).unwrap() {
            lasso.replay(&h).unwrap();
            prop_assert!(lasso.period().is_positive());
        }
        let parallel = SearchOptions { jobs: 3, ..opts };
        let a = wsha_reachable(&h, &ranks, &v0, &target, opts, &mut Stats::default()).unwrap();
        let b = wsha_reachable(&h, &ranks, &v0, &target, parallel, &mut Stats::default()).unwrap();
        prop_assert_eq!(a, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 40, ..ProptestConfig::default() })]

    #[test]
    fn counterexamples_certify(f in formula(&["goal"])) {
        let (h, v0) = robot_with_loop();
        let ranks = infer_ranks(&h).unwrap();
        match wsha_ltl_check(&h, &ranks, &f, &v0, SearchOptions::default(), &mut Stats::default()).unwrap() {
            LtlVerdict::CounterExample(c) => {
                c.lasso.replay(&h).unwrap();
                prop_assert!(c.lasso.period().is_positive());
                prop_assert!(evaluate_trace(&LtlFormula::not(f.clone()), &c.trace_prefix, &c.trace_cycle));
            }
            LtlVerdict::Holds { vacuous } => prop_assert!(!vacuous),
        }
    }
}
