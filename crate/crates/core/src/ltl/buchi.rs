//! Tableau translation from LTL to Büchi automata and lasso membership.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::syntax::LtlFormula;
use super::trace::Letter;
use crate::graph::sccs;
use crate::regions::Observer;

/// Negation normal form with release.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Nnf {
    True,
    False,
    Lit(String, bool),
    And(Box<Nnf>, Box<Nnf>),
    Or(Box<Nnf>, Box<Nnf>),
    Next(Box<Nnf>),
    Until(Box<Nnf>, Box<Nnf>),
    Release(Box<Nnf>, Box<Nnf>),
}

fn nnf(f: &LtlFormula, pos: bool) -> Nnf {
    use LtlFormula as F;
    let b = Box::new;
    match f {
        F::True if pos => Nnf::True,
        F::True => Nnf::False,
        F::False if pos => Nnf::False,
        F::False => Nnf::True,
        F::Prop(p) => Nnf::Lit(p.clone(), pos),
        F::Not(a) => nnf(a, !pos),
        F::And(x, y) if pos => Nnf::And(b(nnf(x, true)), b(nnf(y, true))),
        F::And(x, y) => Nnf::Or(b(nnf(x, false)), b(nnf(y, false))),
        F::Or(x, y) if pos => Nnf::Or(b(nnf(x, true)), b(nnf(y, true))),
        F::Or(x, y) => Nnf::And(b(nnf(x, false)), b(nnf(y, false))),
        F::Implies(x, y) if pos => Nnf::Or(b(nnf(x, false)), b(nnf(y, true))),
        F::Implies(x, y) => Nnf::And(b(nnf(x, true)), b(nnf(y, false))),
        F::Next(a) => Nnf::Next(b(nnf(a, pos))),
        F::Eventually(a) if pos => Nnf::Until(b(Nnf::True), b(nnf(a, true))),
        F::Eventually(a) => Nnf::Release(b(Nnf::False), b(nnf(a, false))),
        F::Always(a) if pos => Nnf::Release(b(Nnf::False), b(nnf(a, true))),
        F::Always(a) => Nnf::Until(b(Nnf::True), b(nnf(a, false))),
        F::Until(x, y) if pos => Nnf::Until(b(nnf(x, true)), b(nnf(y, true))),
        F::Until(x, y) => Nnf::Release(b(nnf(x, false)), b(nnf(y, false))),
    }
}

fn untils(f: &Nnf, out: &mut BTreeSet<Nnf>) {
    match f {
        Nnf::True | Nnf::False | Nnf::Lit(..) => {}
        Nnf::Next(a) => untils(a, out),
        Nnf::And(a, b) | Nnf::Or(a, b) | Nnf::Release(a, b) => {
            untils(a, out);
            untils(b, out);
        }
        Nnf::Until(a, b) => {
            out.insert(f.clone());
            untils(a, out);
            untils(b, out);
        }
    }
}

const INIT: usize = usize::MAX;

#[derive(Clone)]
struct Pending {
    incoming: BTreeSet<usize>,
    new: BTreeSet<Nnf>,
    old: BTreeSet<Nnf>,
    next: BTreeSet<Nnf>,
}

struct Done {
    incoming: BTreeSet<usize>,
    old: BTreeSet<Nnf>,
    next: BTreeSet<Nnf>,
}

/// Tableau expansion: nodes are consistent sets of obligations for now and
/// for the next step.
fn expand(phi: Nnf) -> Vec<Done> {
    let mut done: Vec<Done> = Vec::new();
    let mut stack = vec![Pending {
        incoming: BTreeSet::from([INIT]),
        new: BTreeSet::from([phi]),
        old: BTreeSet::new(),
        next: BTreeSet::new(),
    }];
    while let Some(mut node) = stack.pop() {
        let Some(eta) = node.new.pop_first() else {
            if let Some(d) = done.iter_mut().find(|d| d.old == node.old && d.next == node.next) {
                d.incoming.extend(node.incoming);
            } else {
                done.push(Done { incoming: node.incoming, old: node.old, next: node.next.clone() });
                stack.push(Pending {
                    incoming: BTreeSet::from([done.len() - 1]),
                    new: node.next,
                    old: BTreeSet::new(),
                    next: BTreeSet::new(),
                });
            }
            continue;
        };
        let add = |n: &mut Pending, f: &Nnf| {
            if !n.old.contains(f) {
                n.new.insert(f.clone());
            }
        };
        match &eta {
            Nnf::False => {}
            Nnf::True => {
                node.old.insert(eta);
                stack.push(node);
            }
            Nnf::Lit(p, b) => {
                if !node.old.contains(&Nnf::Lit(p.clone(), !b)) {
                    node.old.insert(eta);
                    stack.push(node);
                }
            }
            Nnf::And(a, b) => {
                add(&mut node, a);
                add(&mut node, b);
                node.old.insert(eta);
                stack.push(node);
            }
            Nnf::Next(a) => {
                node.next.insert((**a).clone());
                node.old.insert(eta);
                stack.push(node);
            }
            Nnf::Or(a, b) | Nnf::Until(a, b) | Nnf::Release(a, b) => {
                let mut left = node.clone();
                let mut right = node;
                match &eta {
                    Nnf::Or(..) => {
                        add(&mut left, a);
                        add(&mut right, b);
                    }
                    Nnf::Until(..) => {
                        add(&mut left, a);
                        left.next.insert(eta.clone());
                        add(&mut right, b);
                    }
                    _ => {
                        add(&mut left, b);
                        left.next.insert(eta.clone());
                        add(&mut right, a);
                        add(&mut right, b);
                    }
                }
                left.old.insert(eta.clone());
                right.old.insert(eta);
                stack.push(right);
                stack.push(left);
            }
        }
    }
    done
}

/// A Büchi state; the predicate must hold of the letter read on entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuchiState {
    pub positive: BTreeSet<String>,
    pub negative: BTreeSet<String>,
    pub accepting: bool,
}

impl BuchiState {
    pub fn matches(&self, letter: &Letter) -> bool {
        self.positive.iter().all(|p| letter.contains(p)) && !self.negative.iter().any(|p| letter.contains(p))
    }

    pub fn predicate(&self) -> String {
        let lits: Vec<String> =
            self.positive.iter().cloned().chain(self.negative.iter().map(|p| format!("!{p}"))).collect();
        if lits.is_empty() {
            "true".into()
        } else {
            lits.join(" & ")
        }
    }
}

/// A word `w0 w1 ...` is accepted when some `q0 q1 ...` has `q0` initial,
/// `q(i+1)` a successor of `qi`, each `qi` matching `wi`, and infinitely
/// many accepting `qi`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuchiAutomaton {
    pub states: Vec<BuchiState>,
    pub initial: Vec<usize>,
    pub successors: Vec<Vec<usize>>,
}

/// Tableau construction followed by degeneralisation over the until
/// obligations.
pub fn ltl_to_buchi(phi: &LtlFormula) -> BuchiAutomaton {
    let root = nnf(phi, true);
    let mut goals = BTreeSet::new();
    untils(&root, &mut goals);
    let nodes = expand(root);
    let goals: Vec<Nnf> = goals.into_iter().collect();
    let fulfils = |d: &Done, g: &Nnf| match g {
        Nnf::Until(_, b) => !d.old.contains(g) || d.old.contains(&**b),
        _ => unreachable!(),
    };
    let k = goals.len().max(1);
    let in_set = |n: usize, i: usize| goals.is_empty() || fulfils(&nodes[n], &goals[i]);
    let mut succ_nodes = vec![Vec::new(); nodes.len()];
    for (j, d) in nodes.iter().enumerate() {
        for &i in &d.incoming {
            if i != INIT {
                succ_nodes[i].push(j);
            }
        }
    }

    let mut index: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut order: Vec<(usize, usize)> = Vec::new();
    let mut queue = VecDeque::new();
    let mut intern = |key: (usize, usize), order: &mut Vec<(usize, usize)>, queue: &mut VecDeque<usize>| {
        *index.entry(key).or_insert_with(|| {
            order.push(key);
            queue.push_back(order.len() - 1);
            order.len() - 1
        })
    };
    let initial: Vec<usize> = (0..nodes.len())
        .filter(|&n| nodes[n].incoming.contains(&INIT))
        .map(|n| intern((n, 0), &mut order, &mut queue))
        .collect();
    let mut successors: Vec<Vec<usize>> = Vec::new();
    while let Some(s) = queue.pop_front() {
        let (n, i) = order[s];
        let j = if in_set(n, i) { (i + 1) % k } else { i };
        let out: Vec<usize> = succ_nodes[n].iter().map(|&m| intern((m, j), &mut order, &mut queue)).collect();
        if successors.len() <= s {
            successors.resize(s + 1, Vec::new());
        }
        successors[s] = out;
    }
    successors.resize(order.len(), Vec::new());
    let states = order
        .iter()
        .map(|&(n, i)| {
            let lits = |b: bool| {
                nodes[n]
                    .old
                    .iter()
                    .filter_map(|f| match f {
                        Nnf::Lit(p, s) if *s == b => Some(p.clone()),
                        _ => None,
                    })
                    .collect()
            };
            BuchiState { positive: lits(true), negative: lits(false), accepting: i == 0 && in_set(n, 0) }
        })
        .collect();
    BuchiAutomaton { states, initial, successors }
}

/// A small bit set over automaton states.
#[derive(Clone)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64).max(1)])
    }
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }
    fn meets(&self, other: &Bits) -> bool {
        self.0.iter().zip(&other.0).any(|(a, b)| a & b != 0)
    }
    fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.0.len() * 64).filter(|&i| self.get(i))
    }
}

impl BuchiAutomaton {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// States from which some accepting run reads `cycle^ω`, having entered
    /// on `cycle[0]`.
    fn good_on_cycle(&self, cycle: &[Letter]) -> Bits {
        let n = self.len();
        let c = cycle.len();
        let ok: Vec<Vec<bool>> = cycle.iter().map(|l| self.states.iter().map(|s| s.matches(l)).collect()).collect();
        let id = |q: usize, i: usize| i * n + q;
        let mut edges = Vec::new();
        for i in 0..c {
            let j = (i + 1) % c;
            for q in (0..n).filter(|&q| ok[i][q]) {
                for &r in self.successors[q].iter().filter(|&&r| ok[j][r]) {
                    edges.push((id(q, i), id(r, j)));
                }
            }
        }
        let comps = sccs(n * c, edges.iter().copied());
        let mut good = vec![false; n * c];
        for comp in &comps {
            let looping = comp.len() > 1 || edges.contains(&(comp[0], comp[0]));
            if looping && comp.iter().any(|&v| self.states[v % n].accepting) {
                for &v in comp {
                    good[v] = true;
                }
            }
        }
        let mut pred = vec![Vec::new(); n * c];
        for &(a, b) in &edges {
            pred[b].push(a);
        }
        let mut queue: VecDeque<usize> = (0..n * c).filter(|&v| good[v]).collect();
        while let Some(v) = queue.pop_front() {
            for &u in &pred[v] {
                if !good[u] {
                    good[u] = true;
                    queue.push_back(u);
                }
            }
        }
        let mut out = Bits::new(n);
        for q in (0..n).filter(|&q| ok[0][q] && good[id(q, 0)]) {
            out.set(q);
        }
        out
    }

    /// States that may read the letter after `prefix`.
    fn after_prefix(&self, prefix: &[Letter]) -> Bits {
        let n = self.len();
        let mut cand = Bits::new(n);
        for &q in &self.initial {
            cand.set(q);
        }
        for l in prefix {
            let mut next = Bits::new(n);
            for q in cand.ones().filter(|&q| q < n && self.states[q].matches(l)) {
                for &r in &self.successors[q] {
                    next.set(r);
                }
            }
            cand = next;
        }
        cand
    }

    pub fn accepts(&self, prefix: &[Letter], cycle: &[Letter]) -> bool {
        self.accepts_all(&[prefix.to_vec()], &[cycle.to_vec()])[0][0]
    }

    /// Membership of every `prefix . cycle^ω`, indexed `[prefix][cycle]`.
    pub fn accepts_all(&self, prefixes: &[Vec<Letter>], cycles: &[Vec<Letter>]) -> Vec<Vec<bool>> {
        assert!(cycles.iter().all(|c| !c.is_empty()), "lasso cycles must be non-empty");
        let good: Vec<Bits> = cycles.iter().map(|c| self.good_on_cycle(c)).collect();
        prefixes
            .iter()
            .map(|p| {
                let cand = self.after_prefix(p);
                good.iter().map(|g| cand.meets(g)).collect()
            })
            .collect()
    }

    /// Whether `letter^ω` is accepted from state `q`, which has just read it.
    pub fn accepts_constant_from(&self, q: usize, letter: &Letter) -> bool {
        self.good_on_cycle(std::slice::from_ref(letter)).get(q)
    }
}

impl Observer for BuchiAutomaton {
    fn start(&self, letter: &BTreeSet<String>) -> Vec<usize> {
        self.initial.iter().copied().filter(|&q| self.states[q].matches(letter)).collect()
    }

    fn step(&self, q: usize, letter: &BTreeSet<String>) -> Vec<usize> {
        self.successors[q].iter().copied().filter(|&r| self.states[r].matches(letter)).collect()
    }

    fn accepting(&self, q: usize) -> bool {
        self.states[q].accepting
    }
}
