//! Direct LTL semantics on ultimately periodic words `prefix . cycle^ω`.

use std::collections::{BTreeSet, HashMap};

use super::syntax::LtlFormula;

pub type Letter = BTreeSet<String>;

#[derive(Debug, Clone, Copy)]
enum Op {
    True,
    False,
    Prop(usize),
    Not(usize),
    And(usize, usize),
    Or(usize, usize),
    Implies(usize, usize),
    Next(usize),
    Eventually(usize),
    Always(usize),
    Until(usize, usize),
}

/// Subformulas in bottom-up order; the root is last.
struct Compiled {
    ops: Vec<Op>,
    props: Vec<String>,
}

impl Compiled {
    fn new(phi: &LtlFormula) -> Self {
        let mut c = Compiled { ops: Vec::new(), props: phi.propositions().into_iter().collect() };
        let mut seen = HashMap::new();
        c.add(phi, &mut seen);
        c
    }

    fn add(&mut self, f: &LtlFormula, seen: &mut HashMap<LtlFormula, usize>) -> usize {
        if let Some(&i) = seen.get(f) {
            return i;
        }
        let op = match f {
            LtlFormula::True => Op::True,
            LtlFormula::False => Op::False,
            LtlFormula::Prop(p) => Op::Prop(self.props.binary_search(p).unwrap()),
            LtlFormula::Not(a) => Op::Not(self.add(a, seen)),
            LtlFormula::Next(a) => Op::Next(self.add(a, seen)),
            LtlFormula::Eventually(a) => Op::Eventually(self.add(a, seen)),
            LtlFormula::Always(a) => Op::Always(self.add(a, seen)),
            LtlFormula::And(a, b) => Op::And(self.add(a, seen), self.add(b, seen)),
            LtlFormula::Or(a, b) => Op::Or(self.add(a, seen), self.add(b, seen)),
            LtlFormula::Implies(a, b) => Op::Implies(self.add(a, seen), self.add(b, seen)),
            LtlFormula::Until(a, b) => Op::Until(self.add(a, seen), self.add(b, seen)),
        };
        self.ops.push(op);
        seen.insert(f.clone(), self.ops.len() - 1);
        self.ops.len() - 1
    }

    fn letter(&self, l: &Letter) -> Vec<bool> {
        self.props.iter().map(|p| l.contains(p)).collect()
    }

    /// Truth of every subformula at a position that is visited once, given
    /// the letter there and the truth values one step later.
    fn step(&self, letter: &[bool], next: &[bool], cur: &mut [bool]) {
        for (i, op) in self.ops.iter().enumerate() {
            cur[i] = match *op {
                Op::True => true,
                Op::False => false,
                Op::Prop(k) => letter[k],
                Op::Not(a) => !cur[a],
                Op::And(a, b) => cur[a] && cur[b],
                Op::Or(a, b) => cur[a] || cur[b],
                Op::Implies(a, b) => !cur[a] || cur[b],
                Op::Next(a) => next[a],
                Op::Eventually(a) => cur[a] || next[i],
                Op::Always(a) => cur[a] && next[i],
                Op::Until(a, b) => cur[b] || (cur[a] && next[i]),
            };
        }
    }

    /// Truth of every subformula at cycle position 0, by fixpoints over the cycle.
    fn cycle_state(&self, cycle: &[Vec<bool>]) -> Vec<bool> {
        let n = cycle.len();
        let succ = |i: usize| (i + 1) % n;
        let mut val: Vec<Vec<bool>> = Vec::with_capacity(self.ops.len());
        for op in &self.ops {
            let row: Vec<bool> = match *op {
                Op::True => vec![true; n],
                Op::False => vec![false; n],
                Op::Prop(k) => cycle.iter().map(|l| l[k]).collect(),
                Op::Not(a) => val[a].iter().map(|x| !x).collect(),
                Op::And(a, b) => (0..n).map(|i| val[a][i] && val[b][i]).collect(),
                Op::Or(a, b) => (0..n).map(|i| val[a][i] || val[b][i]).collect(),
                Op::Implies(a, b) => (0..n).map(|i| !val[a][i] || val[b][i]).collect(),
                Op::Next(a) => (0..n).map(|i| val[a][succ(i)]).collect(),
                Op::Eventually(a) => vec![val[a].iter().any(|&x| x); n],
                Op::Always(a) => vec![val[a].iter().all(|&x| x); n],
                Op::Until(a, b) => {
                    let mut u = vec![false; n];
                    loop {
                        let mut changed = false;
                        for i in (0..n).rev() {
                            let new = val[b][i] || (val[a][i] && u[succ(i)]);
                            if new != u[i] {
                                u[i] = new;
                                changed = true;
                            }
                        }
                        if !changed {
                            break;
                        }
                    }
                    u
                }
            };
            val.push(row);
        }
        val.iter().map(|row| row[0]).collect()
    }
}

/// Whether `prefix . cycle^ω` satisfies `phi`. Panics on an empty cycle.
pub fn evaluate_trace(phi: &LtlFormula, prefix: &[Letter], cycle: &[Letter]) -> bool {
    evaluate_all(phi, &[prefix.to_vec()], &[cycle.to_vec()])[0][0]
}

/// `evaluate_trace` for every prefix/cycle pair, indexed `[prefix][cycle]`.
pub fn evaluate_all(phi: &LtlFormula, prefixes: &[Vec<Letter>], cycles: &[Vec<Letter>]) -> Vec<Vec<bool>> {
    assert!(cycles.iter().all(|c| !c.is_empty()), "lasso cycles must be non-empty");
    let c = Compiled::new(phi);
    let root = c.ops.len() - 1;
    let mut states: Vec<Vec<bool>> = Vec::new();
    let mut state_ids: HashMap<Vec<bool>, usize> = HashMap::new();
    let cycle_state: Vec<usize> = cycles
        .iter()
        .map(|cy| {
            let letters: Vec<Vec<bool>> = cy.iter().map(|l| c.letter(l)).collect();
            let s = c.cycle_state(&letters);
            *state_ids.entry(s.clone()).or_insert_with(|| {
                states.push(s);
                states.len() - 1
            })
        })
        .collect();
    let mut cur = vec![false; c.ops.len()];
    prefixes
        .iter()
        .map(|pre| {
            let letters: Vec<Vec<bool>> = pre.iter().map(|l| c.letter(l)).collect();
            let verdict: Vec<bool> = states
                .iter()
                .map(|s0| {
                    let mut next = s0.clone();
                    for l in letters.iter().rev() {
                        c.step(l, &next, &mut cur);
                        std::mem::swap(&mut next, &mut cur);
                    }
                    next[root]
                })
                .collect();
            cycle_state.iter().map(|&s| verdict[s]).collect()
        })
        .collect()
}
