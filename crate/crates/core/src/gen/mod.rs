//! Instance generators: subset-sum, counter-machine widgets and the robot example.

mod counter;
mod robot;
mod subset_sum;

use std::collections::BTreeSet;

use crate::geometry::{LinearConstraint, Polyhedron, Relation};
use crate::model::{HybridAutomaton, Mode, Transition, Update};
use crate::rational::Rational;

pub use counter::{
    counter_trace, gen_counter_machine_cms_clock, gen_counter_machine_sha, parse_counter_machine, run_counter_machine,
    CmConfig, CmOutcome, Counter, CounterMachine, CounterMachineError, encode_counter, Instruction, CLOCK_CMS_START,
    SHA_START,
};
pub use robot::gen_robot_example;
pub use subset_sum::{gen_subset_sum, SubsetSumError, SubsetSumInstance};

/// Incremental construction of an automaton by mode and action names.
pub(crate) struct Builder {
    h: HybridAutomaton,
}

impl Builder {
    pub fn new(variables: &[&str]) -> Self {
        Builder {
            h: HybridAutomaton {
                variables: variables.iter().map(|s| s.to_string()).collect(),
                modes: Vec::new(),
                initial: Vec::new(),
                transitions: Vec::new(),
                labels: Vec::new(),
            },
        }
    }

    pub fn mode(&mut self, name: &str, rate: Vec<Rational>, invariant: Polyhedron) -> usize {
        debug_assert_eq!(rate.len(), self.h.dim());
        self.h.modes.push(Mode { name: name.to_string(), rate, invariant });
        self.h.labels.push(BTreeSet::new());
        self.h.modes.len() - 1
    }

    pub fn label(&mut self, m: usize, prop: &str) {
        self.h.labels[m].insert(prop.to_string());
    }

    pub fn edge(&mut self, from: usize, to: usize, guard: Polyhedron, updates: Vec<Update>) {
        let action = format!("{}->{}", self.h.modes[from].name, self.h.modes[to].name);
        self.h.transitions.push(Transition { from, action, to, guard, updates });
    }

    pub fn finish(mut self, initial: &[usize]) -> HybridAutomaton {
        self.h.initial = initial.to_vec();
        self.h
    }
}

pub(crate) fn ints(v: &[i64]) -> Vec<Rational> {
    v.iter().map(|&k| Rational::from_int(k)).collect()
}

/// `lo < x_v < hi` as two rows.
pub(crate) fn open_interval(v: usize, lo: Rational, hi: Rational) -> [LinearConstraint; 2] {
    [LinearConstraint::bound(v, Relation::Gt, lo), LinearConstraint::bound(v, Relation::Lt, hi)]
}

/// `lo <= x_v <= hi` as two rows.
pub(crate) fn closed_interval(v: usize, lo: Rational, hi: Rational) -> [LinearConstraint; 2] {
    [LinearConstraint::bound(v, Relation::Ge, lo), LinearConstraint::bound(v, Relation::Le, hi)]
}
