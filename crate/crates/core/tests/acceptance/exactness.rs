//! CMS reachability and schedulability examples with exact dwell vectors.

use std::time::{Duration, Instant};

use weakha::cms::{build_reach_witness, build_sched_witness, cms_reachable, cms_schedulable, SchedOutcome};
use weakha::geometry::Polyhedron;
use weakha::model::HybridAutomaton;
use weakha::stats::Stats;
use weakha::Rational;

use crate::support::{automaton, edge, ensure, ints, mode, open_box, rat, Ledger};

/// Complete graph over modes with the given rates and safety box `(lo, hi)^n`.
fn cms(rates: &[Vec<Rational>], lo: i64, hi: i64) -> HybridAutomaton {
    let safety = open_box(&vec![(lo, hi); rates[0].len()]);
    let modes = rates.iter().enumerate().map(|(i, r)| mode(&format!("m{i}"), r.clone(), safety.clone())).collect();
    let mut edges = Vec::new();
    for a in 0..rates.len() {
        for b in (0..rates.len()).filter(|&b| b != a) {
            edges.push(edge(a, b, &format!("t{a}{b}"), Polyhedron::top()));
        }
    }
    let vars: Vec<String> = (0..rates[0].len()).map(|i| format!("x{i}")).collect();
    let vars: Vec<&str> = vars.iter().map(String::as_str).collect();
    automaton(&vars, modes, edges)
}

fn reach(
    ledger: &mut Ledger,
    name: &str,
    h: &HybridAutomaton,
    v0: &[Rational],
    target: &[Rational],
) -> Result<Option<Vec<Rational>>, String> {
    let target = Polyhedron::point(target);
    let sol = cms_reachable(h, v0, &target, &mut Stats::default()).map_err(|e| format!("{name}: {e}"))?;
    let Some(sol) = sol else { return Ok(None) };
    let run = build_reach_witness(h, v0, &target, &sol).map_err(|e| format!("{name}: {e}"))?;
    ensure(ledger.run(name, h, &run, Some(&target)), || format!("{name}: witness does not replay"))?;
    Ok(Some(sol.times))
}

fn sched(ledger: &mut Ledger, name: &str, h: &HybridAutomaton, v0: &[Rational]) -> Result<Option<Vec<Rational>>, String> {
    match cms_schedulable(h, v0, &mut Stats::default()).map_err(|e| format!("{name}: {e}"))? {
        SchedOutcome::Yes(sol) => {
            let l = build_sched_witness(h, v0, &sol).map_err(|e| format!("{name}: {e}"))?;
            ensure(ledger.lasso(name, h, &l), || format!("{name}: witness does not replay"))?;
            Ok(Some(sol.times))
        }
        SchedOutcome::No { .. } => Ok(None),
    }
}

fn timed<T>(name: &str, f: impl FnOnce() -> Result<T, String>) -> Result<T, String> {
    let began = Instant::now();
    let r = f()?;
    ensure(began.elapsed() < Duration::from_secs(1), || format!("{name} took {:?}", began.elapsed()))?;
    Ok(r)
}

pub fn criterion(ledger: &mut Ledger) -> Result<String, String> {
    let updown = cms(&[ints(&[1]), ints(&[-1])], 0, 10);
    let t = timed("reach up/down", || reach(ledger, "reach up/down", &updown, &ints(&[1]), &ints(&[5])))?;
    let t = t.ok_or("reach up/down: expected Yes")?;
    ensure(&t[0] - &t[1] == rat(4, 1), || format!("reach up/down: dwell {t:?} does not move by 4"))?;

    let up = cms(&[ints(&[1])], 0, 10);
    let t = timed("reach backwards", || reach(ledger, "reach backwards", &up, &ints(&[5]), &ints(&[1])))?;
    ensure(t.is_none(), || "reach backwards: expected No".into())?;

    let axes = cms(&[ints(&[1, 0]), ints(&[0, 1])], 0, 10);
    let t = timed("reach axes", || reach(ledger, "reach axes", &axes, &ints(&[1, 1]), &ints(&[2, 3])))?;
    ensure(t == Some(ints(&[1, 2])), || format!("reach axes: dwell {t:?}, expected (1, 2)"))?;

    let half = vec![rat(1, 2)];
    let unit = cms(&[ints(&[1]), ints(&[-1])], 0, 1);
    let t = timed("sched up/down", || sched(ledger, "sched up/down", &unit, &half))?;
    ensure(t == Some(vec![rat(1, 2), rat(1, 2)]), || format!("sched up/down: dwell {t:?}, expected (1/2, 1/2)"))?;

    let drift = cms(&[ints(&[1])], 0, 1);
    let t = timed("sched drift", || sched(ledger, "sched drift", &drift, &half))?;
    ensure(t.is_none(), || "sched drift: expected No".into())?;

    let tri = cms(&[ints(&[1, 1]), ints(&[-1, 0]), ints(&[0, -1])], 0, 1);
    let t = timed("sched triangle", || sched(ledger, "sched triangle", &tri, &[rat(1, 2), rat(1, 2)]))?;
    let third = rat(1, 3);
    ensure(t == Some(vec![third.clone(), third.clone(), third]), || format!("sched triangle: dwell {t:?}"))?;

    Ok("6/6 examples with exact dwell vectors".into())
}
