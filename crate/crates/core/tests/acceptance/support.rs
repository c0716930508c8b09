//! Shared helpers: witness ledger, model builders and seeded randomness.

use std::any::Any;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use weakha::geometry::{LinearConstraint, Polyhedron, Relation};
use weakha::ltl::{certify, LtlCounterExample, LtlFormula};
use weakha::model::{HybridAutomaton, Mode, Transition};
use weakha::regions::RegionLasso;
use weakha::run::{Lasso, TimedRun};
use weakha::Rational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

pub fn ints(v: &[i64]) -> Vec<Rational> {
    v.iter().map(|&x| Rational::from_int(x)).collect()
}

pub fn bound(v: usize, rel: Relation, c: Rational) -> LinearConstraint {
    LinearConstraint::bound(v, rel, c)
}

/// `lo < x_v < hi` for every variable.
pub fn open_box(bounds: &[(i64, i64)]) -> Polyhedron {
    Polyhedron::new(bounds.iter().enumerate().flat_map(|(v, &(lo, hi))| {
        [bound(v, Relation::Gt, Rational::from_int(lo)), bound(v, Relation::Lt, Rational::from_int(hi))]
    }))
}

pub fn automaton(variables: &[&str], modes: Vec<Mode>, transitions: Vec<Transition>) -> HybridAutomaton {
    HybridAutomaton {
        variables: variables.iter().map(|s| s.to_string()).collect(),
        labels: vec![Default::default(); modes.len()],
        modes,
        initial: vec![0],
        transitions,
    }
}

pub fn mode(name: &str, rate: Vec<Rational>, invariant: Polyhedron) -> Mode {
    Mode { name: name.into(), rate, invariant }
}

pub fn edge(from: usize, to: usize, action: &str, guard: Polyhedron) -> Transition {
    Transition { from, action: action.into(), to, guard, updates: Vec::new() }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn pick<T: Clone>(rng: &mut ChaCha8Rng, xs: &[T]) -> T {
    xs[rng.gen_range(0..xs.len())].clone()
}

pub fn panic_message(p: &Box<dyn Any + Send>) -> String {
    p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default()
}

/// Every witness produced by the suite with the result of replaying it.
#[derive(Default)]
pub struct Ledger {
    checked: usize,
    failures: Vec<String>,
}

impl Ledger {
    pub fn record(&mut self, label: &str, r: Result<(), String>) -> bool {
        self.checked += 1;
        match r {
            Ok(()) => true,
            Err(e) => {
                self.failures.push(format!("{label}: {e}"));
                false
            }
        }
    }

    /// A finite run, optionally required to end in `target`.
    pub fn run(&mut self, label: &str, h: &HybridAutomaton, run: &TimedRun, target: Option<&Polyhedron>) -> bool {
        let r = run.replay(h).map_err(|e| e.to_string()).and_then(|(_, end)| match target {
            Some(t) if !t.contains(&end) => Err(format!("ends at {} outside the target", h.format_valuation(&end))),
            _ => Ok(()),
        });
        self.record(label, r)
    }

    /// A lasso that must close exactly with positive period.
    pub fn lasso(&mut self, label: &str, h: &HybridAutomaton, l: &Lasso) -> bool {
        let r = l.replay(h).map_err(|e| e.to_string()).and_then(|_| {
            if l.period().is_positive() {
                Ok(())
            } else {
                Err("period is not positive".into())
            }
        });
        self.record(label, r)
    }

    pub fn region_lasso(&mut self, label: &str, h: &HybridAutomaton, l: &RegionLasso) -> bool {
        let r = l.verify(h, 3).map_err(|e| e.to_string()).and_then(|_| {
            if l.lasso.period().is_positive() {
                Ok(())
            } else {
                Err("period is not positive".into())
            }
        });
        self.record(label, r)
    }

    pub fn counterexample(&mut self, label: &str, h: &HybridAutomaton, phi: &LtlFormula, c: &LtlCounterExample) -> bool {
        let r = certify(h, &LtlFormula::not(phi.clone()), c).map_err(|e| e.to_string());
        self.record(label, r)
    }

    pub fn summary(&self) -> Result<String, String> {
        if self.checked == 0 {
            return Err("no witnesses were produced".into());
        }
        if self.failures.is_empty() {
            Ok(format!("{0}/{0} witnesses replay exactly", self.checked))
        } else {
            Err(format!(
                "{}/{} witnesses failed; first: {}",
                self.failures.len(),
                self.checked,
                self.failures[0]
            ))
        }
    }
}

/// Fails with `msg` unless `cond` holds.
pub fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}
