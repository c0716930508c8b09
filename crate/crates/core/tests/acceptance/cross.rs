//! Random weak automata: type LPs against bounded symbolic reachability.

use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use weakha::geometry::{Polyhedron, Relation};
use weakha::model::{infer_ranks, HybridAutomaton, Update, UpdateKind};
use weakha::stats::Stats;
use weakha::symbolic::{bounded_reach, BoundedOutcome};
use weakha::wsha::{wsha_reachable, ReachResult, SearchOptions};
use weakha::Rational;

use crate::support::{automaton, bound, edge, ensure, mode, open_box, pick, rng, Ledger};

const RELATIONS: [Relation; 5] = [Relation::Lt, Relation::Le, Relation::Eq, Relation::Ge, Relation::Gt];

fn int(r: &mut ChaCha8Rng, lo: i64, hi: i64) -> Rational {
    Rational::from_int(r.gen_range(lo..=hi))
}

/// A weak automaton with up to 3 variables, 3 classes of 1 or 2 modes each,
/// guards and updates only on boundary transitions, and its start valuation.
pub fn random_wsha(r: &mut ChaCha8Rng) -> (HybridAutomaton, Vec<Rational>) {
    let dim = r.gen_range(1..=3);
    let classes = r.gen_range(1..=3);
    let mut modes = Vec::new();
    let mut edges = Vec::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut v0 = Vec::new();
    for c in 0..classes {
        let bounds: Vec<(i64, i64)> = (0..dim)
            .map(|_| {
                let lo = r.gen_range(-5..=3);
                (lo, r.gen_range(lo + 2..=5))
            })
            .collect();
        if c == 0 {
            v0 = bounds.iter().map(|&(lo, hi)| Rational::from_int(lo) + Rational::new((hi - lo) * r.gen_range(1..=3), 4)).collect();
        }
        let safety = open_box(&bounds);
        let size = r.gen_range(1..=2);
        let mut ms = Vec::new();
        for k in 0..size {
            let rate = (0..dim).map(|_| int(r, -2, 2)).collect();
            modes.push(mode(&format!("c{c}m{k}"), rate, safety.clone()));
            ms.push(modes.len() - 1);
        }
        if size == 2 {
            edges.push(edge(ms[0], ms[1], &format!("c{c}fwd"), Polyhedron::top()));
            edges.push(edge(ms[1], ms[0], &format!("c{c}back"), Polyhedron::top()));
        } else if r.gen_bool(0.5) {
            edges.push(edge(ms[0], ms[0], &format!("c{c}loop"), Polyhedron::top()));
        }
        members.push(ms);
    }
    for i in 0..classes {
        for j in i + 1..classes {
            if j != i + 1 && !r.gen_bool(0.4) {
                continue;
            }
            for k in 0..r.gen_range(1..=2) {
                let guard = Polyhedron::new((0..r.gen_range(0..=2)).map(|_| {
                    bound(r.gen_range(0..dim), pick(r, &RELATIONS), int(r, -5, 5))
                }));
                let mut e = edge(pick(r, &members[i]), pick(r, &members[j]), &format!("b{i}{j}_{k}"), guard);
                if r.gen_bool(0.3) {
                    let kind = if r.gen_bool(0.5) { UpdateKind::Set } else { UpdateKind::Add };
                    e.updates.push(Update { var: r.gen_range(0..dim), kind, amount: int(r, -3, 3) });
                }
                edges.push(e);
            }
        }
    }
    let vars: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
    let vars: Vec<&str> = vars.iter().map(String::as_str).collect();
    (automaton(&vars, modes, edges), v0)
}

/// A closed box or point over some of the variables.
fn random_target(r: &mut ChaCha8Rng, dim: usize) -> Polyhedron {
    let mut rows = Vec::new();
    for v in (0..dim).filter(|_| r.gen_bool(0.7)).collect::<Vec<_>>() {
        let a = r.gen_range(-5..=5);
        let b = if r.gen_bool(0.3) { a } else { r.gen_range(a..=5) };
        rows.push(bound(v, Relation::Ge, Rational::from_int(a)));
        rows.push(bound(v, Relation::Le, Rational::from_int(b)));
    }
    Polyhedron::new(rows)
}

pub fn criterion(ledger: &mut Ledger) -> Result<String, String> {
    let began = Instant::now();
    let mut r = rng(3);
    let (mut reached, mut lp_yes, mut multi_class, mut updates) = (0, 0, 0, 0);
    for i in 0..100 {
        let (h, v0) = random_wsha(&mut r);
        let target = random_target(&mut r, h.dim());
        let ranks = infer_ranks(&h).map_err(|e| format!("instance {i} is not weak: {e}"))?;
        multi_class += usize::from(ranks.classes.len() > 1);
        updates += usize::from(h.transitions.iter().any(|t| !t.updates.is_empty()));
        let lp = wsha_reachable(&h, &ranks, &v0, &target, SearchOptions::default(), &mut Stats::default())
            .map_err(|e| format!("instance {i}: {e}"))?;
        let sym = bounded_reach(&h, h.initial[0], &Polyhedron::point(&v0), None, &target, 6, &mut Stats::default());
        if let ReachResult::Yes { run, .. } = &lp {
            ledger.run(&format!("cross {i} type LP"), &h, run, Some(&target));
            lp_yes += 1;
        }
        if let BoundedOutcome::Reached { run, .. } = &sym {
            ledger.run(&format!("cross {i} symbolic"), &h, run, Some(&target));
            reached += 1;
        }
        let lp_no = matches!(lp, ReachResult::No);
        ensure(!(lp_no && !matches!(sym, BoundedOutcome::NotWithinDepth)), || {
            format!("instance {i}: type LPs say No, symbolic says {sym:?}\n{}", weakha::model::to_model_text(&h))
        })?;
    }
    let elapsed = began.elapsed();
    ensure(elapsed < Duration::from_secs(300), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "100 instances ({multi_class} with several classes, {updates} with updates), \
         {lp_yes} reachable by type LPs, {reached} reached symbolically within depth 6"
    ))
}
