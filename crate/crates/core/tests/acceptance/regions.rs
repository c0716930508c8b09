//! Region graphs of one-variable automata and the progressiveness conditions.

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use weakha::geometry::{Polyhedron, Relation};
use weakha::model::{HybridAutomaton, Update, UpdateKind};
use weakha::regions::{
    build_region_graph, classify_cycle, polyhedron_constants, region_reachable, region_schedulable, Move, RegionGraph,
    RegionReach, Walk,
};
use weakha::run::{replay_steps, Step, TimedRun};
use weakha::stats::Stats;
use weakha::symbolic::{bounded_reach, BoundedOutcome};
use weakha::Rational;

use crate::support::{automaton, bound, edge, ensure, ints, mode, pick, rat, rng, Ledger};

const RELATIONS: [Relation; 5] = [Relation::Lt, Relation::Le, Relation::Eq, Relation::Ge, Relation::Gt];

fn constant(r: &mut ChaCha8Rng) -> Rational {
    Rational::from_int(r.gen_range(-3..=3))
}

fn interval(r: &mut ChaCha8Rng) -> Polyhedron {
    let a = r.gen_range(-3..=2);
    let b = r.gen_range(a + 1..=3);
    let lo = if r.gen_bool(0.5) { Relation::Ge } else { Relation::Gt };
    let hi = if r.gen_bool(0.5) { Relation::Le } else { Relation::Lt };
    Polyhedron::new([bound(0, lo, Rational::from_int(a)), bound(0, hi, Rational::from_int(b))])
}

fn random_onevar(r: &mut ChaCha8Rng) -> HybridAutomaton {
    let n = r.gen_range(1..=3);
    let modes = (0..n)
        .map(|i| {
            let inv = if r.gen_bool(0.5) { Polyhedron::top() } else { interval(r) };
            mode(&format!("m{i}"), ints(&[r.gen_range(-2..=2)]), inv)
        })
        .collect();
    let edges = (0..r.gen_range(1..=4))
        .map(|k| {
            let guard = match r.gen_range(0..3) {
                0 => Polyhedron::top(),
                1 => Polyhedron::new([bound(0, pick(r, &RELATIONS), constant(r))]),
                _ => interval(r),
            };
            let mut e = edge(r.gen_range(0..n), r.gen_range(0..n), &format!("t{k}"), guard);
            if r.gen_bool(0.3) {
                e.updates.push(Update { var: 0, kind: UpdateKind::Set, amount: constant(r) });
            }
            e
        })
        .collect();
    automaton(&["x"], modes, edges)
}

fn random_target(r: &mut ChaCha8Rng) -> Polyhedron {
    match r.gen_range(0..4) {
        0 => Polyhedron::point(&[constant(r)]),
        1 => Polyhedron::new([bound(0, pick(r, &RELATIONS[3..]), constant(r))]),
        2 => Polyhedron::new([bound(0, pick(r, &RELATIONS[..2]), constant(r))]),
        _ => interval(r),
    }
}

/// Every constant of the model plus `extra`.
fn model_constants(h: &HybridAutomaton, extra: &[Rational]) -> BTreeSet<Rational> {
    let mut out: BTreeSet<Rational> = extra.iter().cloned().collect();
    for m in &h.modes {
        out.extend(polyhedron_constants(&m.invariant));
    }
    for t in &h.transitions {
        out.extend(polyhedron_constants(&t.guard));
        out.extend(t.updates.iter().map(|u| u.amount.clone()));
    }
    out
}

fn graph(h: &HybridAutomaton, extra: &[Rational]) -> Result<RegionGraph, String> {
    let rg = build_region_graph(h, extra).map_err(|e| e.to_string())?;
    let m = model_constants(h, extra).len();
    ensure(rg.regions.len() == 2 * m + 1, || format!("{} regions for {m} constants", rg.regions.len()))?;
    Ok(rg)
}

fn two_modes(r0: i64, r1: i64) -> HybridAutomaton {
    let below = || Polyhedron::new([bound(0, Relation::Lt, rat(1, 1))]);
    let mut h = automaton(
        &["x"],
        vec![mode("m0", ints(&[r0]), Polyhedron::top()), mode("m1", ints(&[r1]), Polyhedron::top())],
        vec![edge(0, 1, "a", below()), edge(1, 0, "b", below())],
    );
    h.labels[0].insert("p".into());
    h
}

/// The `m0`/`m1` alternation inside the region `(0, 1)`.
fn alternation(h: &HybridAutomaton, rg: &RegionGraph, region: usize) -> Walk {
    let a = rg.node_of(0, region).unwrap();
    let b = rg.node_of(1, region).unwrap();
    vec![(a, Move::Discrete(h.action_index("a").unwrap())), (b, Move::Discrete(h.action_index("b").unwrap()))]
}

pub fn fidelity(ledger: &mut Ledger) -> Result<String, String> {
    let mut r = rng(5);
    let (mut yes, mut graphs) = (0, 0);
    for i in 0..100 {
        let h = random_onevar(&mut r);
        let x0 = Rational::new(r.gen_range(-7..=7), 2);
        let target = random_target(&mut r);
        let mut extra = vec![x0.clone()];
        extra.extend(polyhedron_constants(&target));
        let rg = graph(&h, &extra).map_err(|e| format!("instance {i}: {e}"))?;
        graphs += 1;
        let reg = region_reachable(&h, &rg, 0, &x0, &target).map_err(|e| format!("instance {i}: {e}"))?;
        let depth = rg.nodes.len();
        let sym = bounded_reach(&h, 0, &Polyhedron::point(&[x0.clone()]), None, &target, depth, &mut Stats::default());
        if let RegionReach::Yes { run, .. } = &reg {
            ledger.run(&format!("regions {i}"), &h, run, Some(&target));
            yes += 1;
        }
        if let BoundedOutcome::Reached { run, .. } = &sym {
            ledger.run(&format!("regions {i} symbolic"), &h, run, Some(&target));
        }
        let agree = match (&reg, &sym) {
            (RegionReach::Yes { .. }, BoundedOutcome::Reached { .. }) => true,
            (RegionReach::No, BoundedOutcome::NotWithinDepth) => true,
            _ => false,
        };
        ensure(agree, || {
            format!(
                "instance {i} from x = {x0} to {}: regions {reg:?}, symbolic {sym:?}\n{}",
                h.format_polyhedron(&target),
                weakha::model::to_model_text(&h)
            )
        })?;
    }

    // The figure's pair: opposite rates alternate, equal rates cannot.
    let fig8 = two_modes(1, -1);
    let rg = graph(&fig8, &[rat(0, 1)])?;
    graphs += 1;
    let v = classify_cycle(&fig8, &rg, &alternation(&fig8, &rg, 2), &rat(0, 1)).map_err(|e| e.to_string())?;
    ensure(v.progressive && v.condition == Some(5), || format!("figure cycle: {v:?}"))?;
    let s = v.schedule.unwrap();
    // (m0, 0) -> (m1, 1/2) -> (m0, 1/4) -> (m1, 1/2) -> ...
    ensure(s.lead == [rat(1, 2), rat(1, 4)] && s.period == [rat(1, 4), rat(1, 4)], || format!("figure schedule {s:?}"))?;
    let run = TimedRun {
        start_mode: 0,
        start: vec![rat(0, 1)],
        steps: vec![
            Step { mode: 0, dwell: rat(1, 2), action: Some(0) },
            Step { mode: 1, dwell: rat(1, 4), action: Some(1) },
            Step { mode: 0, dwell: rat(1, 4), action: Some(0) },
        ],
    };
    let (m, v) = run.replay(&fig8).map_err(|e| e.to_string())?;
    ensure(m == 1 && v == [rat(1, 2)], || "figure run does not return to (m1, 1/2)".into())?;
    let l = region_schedulable(&fig8, &rg, 0, &rat(0, 1)).map_err(|e| e.to_string())?.ok_or("figure is not schedulable")?;
    ensure(ledger.region_lasso("figure lasso", &fig8, &l), || "figure lasso does not replay".into())?;

    let timed = two_modes(1, 1);
    let rg = graph(&timed, &[rat(0, 1)])?;
    graphs += 1;
    let v = classify_cycle(&timed, &rg, &alternation(&timed, &rg, 2), &rat(0, 1)).map_err(|e| e.to_string())?;
    ensure(!v.progressive, || format!("equal-rate cycle: {v:?}"))?;

    Ok(format!("{graphs} graphs with 2m+1 regions, 100/100 agree ({yes} reachable), figure pair classified"))
}

/// Replays a schedule: the lead once, then three periods, each taking at
/// least the declared period time.
fn replay_schedule(
    h: &HybridAutomaton,
    rg: &RegionGraph,
    cycle: &Walk,
    entry: &Rational,
    lead: &[Rational],
    period: &[Rational],
    bound: &Rational,
) -> Result<(), String> {
    let steps = |dwells: &[Rational]| -> Vec<Step> {
        dwells
            .iter()
            .zip(cycle.iter().cycle())
            .map(|(d, &(n, mv))| Step {
                mode: rg.nodes[n].mode,
                dwell: d.clone(),
                action: if let Move::Discrete(t) = mv { Some(t) } else { None },
            })
            .collect()
    };
    ensure(lead.len() % cycle.len() == 0 && period.len() % cycle.len() == 0, || "partial passes".into())?;
    let start = rg.nodes[cycle[0].0].mode;
    let (mut m, mut v) = replay_steps(h, start, vec![entry.clone()], &steps(lead), 0).map_err(|e| e.to_string())?;
    for k in 0..3 {
        let elapsed: Rational = period.iter().cloned().sum();
        ensure(bound.is_positive() && &elapsed >= bound, || format!("period {k} takes {elapsed}, bound {bound}"))?;
        (m, v) = replay_steps(h, m, v, &steps(period), 0).map_err(|e| format!("period {k}: {e}"))?;
    }
    Ok(())
}

pub fn conditions(ledger: &mut Ledger) -> Result<String, String> {
    let mut cases: Vec<(u8, HybridAutomaton, Vec<Rational>, Box<dyn Fn(&HybridAutomaton, &RegionGraph) -> Walk>, Rational)> = Vec::new();

    // 1: a zero-rate mode in the cycle.
    cases.push((1, two_modes(1, 0), ints(&[0]), Box::new(|h, rg| alternation(h, rg, 2)), rat(1, 2)));

    // 2 and 3: unguarded alternation beyond every constant.
    let unbounded = |r0: i64, r1: i64| {
        automaton(
            &["x"],
            vec![mode("m0", ints(&[r0]), Polyhedron::top()), mode("m1", ints(&[r1]), Polyhedron::top())],
            vec![edge(0, 1, "a", Polyhedron::top()), edge(1, 0, "b", Polyhedron::top())],
        )
    };
    cases.push((2, unbounded(1, 2), ints(&[0]), Box::new(|h, rg| alternation(h, rg, 2)), rat(1, 1)));
    cases.push((3, unbounded(-1, -2), ints(&[0]), Box::new(|h, rg| alternation(h, rg, 0)), rat(-1, 1)));

    // 4: a clock reset to 0 below 1, so the cycle leaves the thin region [0] by time.
    let mut reset = automaton(
        &["x"],
        vec![mode("m0", ints(&[1]), Polyhedron::top())],
        vec![edge(0, 0, "r", Polyhedron::new([bound(0, Relation::Lt, rat(1, 1))]))],
    );
    reset.transitions[0].updates.push(Update::reset(0));
    cases.push((
        4,
        reset,
        ints(&[0, 1]),
        Box::new(|_, rg| vec![(rg.node_of(0, 1).unwrap(), Move::Time), (rg.node_of(0, 2).unwrap(), Move::Discrete(0))]),
        rat(0, 1),
    ));

    // 5: the figure's alternation with opposite rates.
    cases.push((5, two_modes(1, -1), ints(&[0]), Box::new(|h, rg| alternation(h, rg, 2)), rat(0, 1)));

    for (cond, h, extra, walk, entry) in &cases {
        let rg = graph(h, extra)?;
        let cycle = walk(h, &rg);
        let v = classify_cycle(h, &rg, &cycle, entry).map_err(|e| format!("condition {cond}: {e}"))?;
        ensure(v.progressive && v.condition == Some(*cond), || format!("condition {cond} cycle classified as {v:?}"))?;
        let s = v.schedule.ok_or(format!("condition {cond}: no schedule"))?;
        let r = replay_schedule(h, &rg, &cycle, entry, &s.lead, &s.period, &s.period_time);
        ensure(ledger.record(&format!("condition {cond} schedule"), r.clone()), || format!("condition {cond}: {}", r.unwrap_err()))?;
    }
    Ok("conditions 1-5 each classified with a replaying schedule".into())
}
