//! Büchi membership against direct evaluation, and the model-checking examples.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use weakha::gen::gen_robot_example;
use weakha::ltl::{evaluate_all, ltl_to_buchi, parse_ltl, wsha_ltl_check, Letter, LtlFormula, LtlVerdict};
use weakha::model::{infer_ranks, HybridAutomaton};
use weakha::stats::Stats;
use weakha::wsha::SearchOptions;
use weakha::Rational;

use crate::support::{ensure, ints, Ledger};

/// All formulas by node count up to `max`, over the leaves `true`, `false`, `p`, `q`.
fn formulas(max: usize) -> Vec<LtlFormula> {
    let mut by: Vec<Vec<LtlFormula>> = vec![Vec::new(); max + 1];
    by[1] = vec![LtlFormula::True, LtlFormula::False, LtlFormula::prop("p"), LtlFormula::prop("q")];
    for s in 2..=max {
        let mut out = Vec::new();
        for a in &by[s - 1] {
            out.push(LtlFormula::not(a.clone()));
            out.push(LtlFormula::next(a.clone()));
            out.push(LtlFormula::eventually(a.clone()));
            out.push(LtlFormula::always(a.clone()));
        }
        for l in 1..s - 1 {
            for a in &by[l] {
                for b in &by[s - 1 - l] {
                    out.push(LtlFormula::and(a.clone(), b.clone()));
                    out.push(LtlFormula::or(a.clone(), b.clone()));
                    out.push(LtlFormula::implies(a.clone(), b.clone()));
                    out.push(LtlFormula::until(a.clone(), b.clone()));
                }
            }
        }
        by[s] = out;
    }
    by.concat()
}

/// All words over the four letters with length in `min..=max`.
fn words(min: usize, max: usize) -> Vec<Vec<Letter>> {
    let p = || "p".to_string();
    let q = || "q".to_string();
    let letters: Vec<Letter> = vec![Letter::new(), [p()].into(), [q()].into(), [p(), q()].into()];
    let mut out = Vec::new();
    let mut layer: Vec<Vec<Letter>> = vec![Vec::new()];
    for len in 0..=max {
        if len >= min {
            out.extend(layer.iter().cloned());
        }
        layer = layer
            .iter()
            .flat_map(|w| {
                letters.iter().map(move |l| {
                    let mut w = w.clone();
                    w.push(l.clone());
                    w
                })
            })
            .collect();
    }
    out
}

fn exhaustive() -> Result<String, String> {
    let fs = formulas(6);
    let (prefixes, cycles) = (words(0, 4), words(1, 4));
    let next = AtomicUsize::new(0);
    let first_mismatch: Mutex<Option<String>> = Mutex::new(None);
    let threads = std::thread::available_parallelism().map_or(4, |n| n.get());
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= fs.len() || first_mismatch.lock().unwrap().is_some() {
                    break;
                }
                let f = &fs[i];
                let direct = evaluate_all(f, &prefixes, &cycles);
                let automaton = ltl_to_buchi(f).accepts_all(&prefixes, &cycles);
                if direct != automaton {
                    let (a, b) = (0..prefixes.len())
                        .flat_map(|a| (0..cycles.len()).map(move |b| (a, b)))
                        .find(|&(a, b)| direct[a][b] != automaton[a][b])
                        .unwrap();
                    *first_mismatch.lock().unwrap() =
                        Some(format!("{f} on {:?} ({:?})^w: direct {}", prefixes[a], cycles[b], direct[a][b]));
                }
            });
        }
    });
    if let Some(m) = first_mismatch.into_inner().unwrap() {
        return Err(m);
    }
    Ok(format!("{} formulas x {} words agree", fs.len(), prefixes.len() * cycles.len()))
}

fn check(h: &HybridAutomaton, v0: &[Rational], phi: &LtlFormula) -> Result<LtlVerdict<weakha::ltl::LtlCounterExample>, String> {
    let ranks = infer_ranks(h).map_err(|e| e.to_string())?;
    wsha_ltl_check(h, &ranks, phi, v0, SearchOptions::default(), &mut Stats::default()).map_err(|e| format!("{phi}: {e}"))
}

fn model_checking(ledger: &mut Ledger) -> Result<(), String> {
    let (mut robot, v0, _) = gen_robot_example();

    let valid = parse_ltl("G (goal | !goal)").unwrap();
    let v = check(&robot, &v0, &valid)?;
    ensure(v == LtlVerdict::Holds { vacuous: false }, || format!("{valid}: {v:?}"))?;

    // The first room made schedulable: opposite horizontal rates.
    let mut looping = robot.clone();
    looping.modes[0].rate = ints(&[1, 0]);
    looping.modes[1].rate = ints(&[-1, 0]);
    let reach = parse_ltl("F goal").unwrap();
    match check(&looping, &v0, &reach)? {
        LtlVerdict::CounterExample(c) => {
            ensure(ledger.counterexample("F goal", &looping, &reach, &c), || "F goal: counterexample does not certify".into())?;
            ensure(c.classes.len() == 1, || format!("F goal: counterexample leaves the first room: {:?}", c.classes))?;
        }
        v => return Err(format!("F goal on the looping robot: {v:?}")),
    }

    let ranks = infer_ranks(&robot).map_err(|e| e.to_string())?;
    for (r, class) in ranks.classes.iter().enumerate() {
        for &m in &class.modes {
            robot.labels[m].insert(format!("o{}", r + 1));
        }
    }
    let all = parse_ltl("G (o1 | o2 | o3 | o4)").unwrap();
    let v = check(&robot, &v0, &all)?;
    ensure(v == LtlVerdict::Holds { vacuous: false }, || format!("{all}: {v:?}"))?;
    Ok(())
}

pub fn criterion(ledger: &mut Ledger) -> Result<String, String> {
    let detail = exhaustive()?;
    model_checking(ledger)?;
    Ok(format!("{detail}; 3 model-checking examples as stated"))
}
