//! Two-counter machines: parsing, simulation and the two widget encodings.

use std::collections::BTreeMap;

use crate::geometry::{LinearConstraint, Polyhedron, Relation};
use crate::model::{HybridAutomaton, Update};
use crate::rational::{rat, Rational};

use super::{closed_interval, ints, Builder};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Counter {
    C1,
    C2,
}

impl Counter {
    fn index(self) -> usize {
        match self {
            Counter::C1 => 0,
            Counter::C2 => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Instruction {
    Inc(Counter, usize),
    Dec(Counter, usize),
    IfZero(Counter, usize, usize),
    Halt,
}

/// Instruction `i` is labelled `l{i}`; execution starts at `l0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterMachine {
    pub instructions: Vec<Instruction>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct CounterMachineError {
    pub line: usize,
    pub message: String,
}

fn label_number(s: &str) -> Option<usize> {
    s.strip_prefix('l')?.parse().ok()
}

/// Parses `lN: inc c1 goto lM`, `lN: dec c2 goto lM`,
/// `lN: ifz c1 goto lM else lK` and `lN: halt`. Blank lines and `#` comments
/// are skipped. Labels must be exactly `l0..ln`.
pub fn parse_counter_machine(text: &str) -> Result<CounterMachine, CounterMachineError> {
    let mut by_label: BTreeMap<usize, (usize, Instruction)> = BTreeMap::new();
    let mut refs: Vec<(usize, usize)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |message: String| CounterMachineError { line, message };
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (label, rest) = body.split_once(':').ok_or_else(|| err("expected `lN:`".into()))?;
        let n = label_number(label.trim()).ok_or_else(|| err(format!("bad label `{}`", label.trim())))?;
        let words: Vec<&str> = rest.split_whitespace().collect();
        let counter = |w: &str| match w {
            "c1" => Ok(Counter::C1),
            "c2" => Ok(Counter::C2),
            _ => Err(err(format!("unknown counter `{w}`"))),
        };
        let target = |w: &str| label_number(w).ok_or_else(|| err(format!("bad label `{w}`")));
        let ins = match words.as_slice() {
            ["halt"] => Instruction::Halt,
            ["inc", c, "goto", l] => Instruction::Inc(counter(c)?, target(l)?),
            ["dec", c, "goto", l] => Instruction::Dec(counter(c)?, target(l)?),
            ["ifz", c, "goto", l, "else", k] => Instruction::IfZero(counter(c)?, target(l)?, target(k)?),
            _ => return Err(err(format!("cannot parse `{}`", rest.trim()))),
        };
        match ins {
            Instruction::Inc(_, l) | Instruction::Dec(_, l) => refs.push((line, l)),
            Instruction::IfZero(_, l, k) => refs.extend([(line, l), (line, k)]),
            Instruction::Halt => {}
        }
        if by_label.insert(n, (line, ins)).is_some() {
            return Err(err(format!("duplicate label l{n}")));
        }
    }
    if by_label.is_empty() {
        return Err(CounterMachineError { line: 0, message: "empty program".into() });
    }
    for (i, (&n, &(line, _))) in by_label.iter().enumerate() {
        if n != i {
            return Err(CounterMachineError { line, message: format!("labels must be l0..l{}", by_label.len() - 1) });
        }
    }
    for (line, l) in refs {
        if l >= by_label.len() {
            return Err(CounterMachineError { line, message: format!("unknown label l{l}") });
        }
    }
    Ok(CounterMachine { instructions: by_label.into_values().map(|(_, ins)| ins).collect() })
}

/// A configuration: current instruction and both counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CmConfig {
    pub label: usize,
    pub c1: u64,
    pub c2: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmOutcome {
    /// `steps` counts executed instructions including the final halt.
    Halted { c1: u64, c2: u64, steps: usize },
    Running,
    StuckDecrementOnZero { label: usize, steps: usize },
}

/// Configurations visited from `(l0, 0, 0)`, at most `max_steps` of them,
/// together with the outcome.
pub fn counter_trace(m: &CounterMachine, max_steps: usize) -> (Vec<CmConfig>, CmOutcome) {
    let mut cfg = CmConfig { label: 0, c1: 0, c2: 0 };
    let mut trace = Vec::new();
    while trace.len() < max_steps {
        trace.push(cfg);
        let steps = trace.len();
        let mut c = [cfg.c1, cfg.c2];
        let next = match m.instructions[cfg.label] {
            Instruction::Halt => return (trace, CmOutcome::Halted { c1: cfg.c1, c2: cfg.c2, steps }),
            Instruction::Inc(k, l) => {
                c[k.index()] += 1;
                l
            }
            Instruction::Dec(k, l) => {
                if c[k.index()] == 0 {
                    return (trace, CmOutcome::StuckDecrementOnZero { label: cfg.label, steps });
                }
                c[k.index()] -= 1;
                l
            }
            Instruction::IfZero(k, l, e) => {
                if c[k.index()] == 0 {
                    l
                } else {
                    e
                }
            }
        };
        cfg = CmConfig { label: next, c1: c[0], c2: c[1] };
    }
    (trace, CmOutcome::Running)
}

pub fn run_counter_machine(m: &CounterMachine, max_steps: usize) -> CmOutcome {
    counter_trace(m, max_steps).1
}

/// `5 - 1/2^c`.
pub fn encode_counter(c: u64) -> Rational {
    Rational::from_int(5) - Rational::pow2_neg(c as u32)
}

/// Start valuation `(x, y, z)` of the update-based encoding.
pub const SHA_START: [i64; 3] = [0, 4, 4];
/// Start valuation `(x1, x2, y, x)` of the clock encoding.
pub const CLOCK_CMS_START: [i64; 4] = [4, 4, 1, 0];

fn mode_name(i: usize) -> String {
    format!("l{i}")
}

/// Encoding with variables `x, y, z` and additive updates: `y` and `z` hold
/// `5 - 1/2^c` for the two counters and `x` is a bounded timer. Widgets for
/// `c2` mirror the `c1` widgets with `y` and `z` swapped.
pub fn gen_counter_machine_sha(m: &CounterMachine) -> HybridAutomaton {
    let mut b = Builder::new(&["x", "y", "z"]);
    let inv = Polyhedron::new(
        [closed_interval(0, rat(0, 1), rat(1, 1)), closed_interval(1, rat(0, 1), rat(5, 1)), closed_interval(2, rat(0, 1), rat(5, 1))]
            .into_iter()
            .flatten(),
    );
    // rate vector (x, counter var); the other counter variable is frozen
    let rate = |x: Rational, k: usize, r: Rational| {
        let mut v = vec![x, Rational::zero(), Rational::zero()];
        v[k] = r;
        v
    };
    let heads: Vec<usize> = m
        .instructions
        .iter()
        .enumerate()
        .map(|(i, ins)| {
            let r = match *ins {
                Instruction::Inc(c, _) | Instruction::Dec(c, _) => rate(rat(1, 1), 1 + c.index(), rat(-6, 1)),
                Instruction::IfZero(c, _, _) => rate(rat(2, 1), 1 + c.index(), rat(1, 1)),
                Instruction::Halt => ints(&[0, 0, 0]),
            };
            let id = b.mode(&mode_name(i), r, inv.clone());
            if *ins == Instruction::Halt {
                b.label(id, "halt");
            }
            id
        })
        .collect();
    let top = Polyhedron::top;
    for (i, ins) in m.instructions.iter().enumerate() {
        let l = heads[i];
        let sub = |b: &mut Builder, s: &str, r: Vec<Rational>| b.mode(&format!("l{i}_{s}"), r, inv.clone());
        match *ins {
            Instruction::Inc(c, next) | Instruction::Dec(c, next) => {
                let k = 1 + c.index();
                let last = if matches!(ins, Instruction::Inc(..)) { -3 } else { -12 };
                let a = sub(&mut b, "A", rate(rat(1, 1), k, rat(-30, 1)));
                let bb = sub(&mut b, "B", rate(rat(1, 1), k, rat(last, 1)));
                b.edge(l, a, top(), vec![Update::add(k, rat(5, 1))]);
                b.edge(a, bb, top(), vec![Update::add(k, rat(5, 1))]);
                b.edge(bb, heads[next], top(), vec![Update::add(0, rat(-1, 1))]);
            }
            Instruction::IfZero(c, then, other) => {
                let k = 1 + c.index();
                let a = sub(&mut b, "A", rate(rat(-1, 1), k, rat(-1, 1)));
                let bm = sub(&mut b, "B", rate(rat(1, 1), k, rat(1, 2)));
                let cm = sub(&mut b, "C", rate(rat(2, 1), k, rat(1, 1)));
                let dm = sub(&mut b, "D", ints(&[0, 0, 0]));
                b.edge(l, a, top(), vec![Update::add(k, rat(1, 1))]);
                b.edge(a, heads[then], top(), vec![Update::add(k, rat(-1, 1))]);
                b.edge(l, bm, top(), vec![Update::add(k, rat(-5, 1))]);
                b.edge(bm, cm, top(), vec![Update::add(0, rat(-1, 1))]);
                b.edge(cm, dm, top(), vec![Update::add(0, rat(-1, 1))]);
                b.edge(dm, heads[other], top(), vec![Update::add(k, rat(4, 1))]);
            }
            Instruction::Halt => {}
        }
    }
    b.finish(&[heads[0]])
}

/// Encoding with bounded variables `x1, x2, y` and a clock `x` of rate 1 in
/// every mode, reset on every gadget edge. Gadgets for `c2` mirror the `c1`
/// gadgets with `x1` and `x2` swapped.
pub fn gen_counter_machine_cms_clock(m: &CounterMachine) -> HybridAutomaton {
    const CLOCK: usize = 3;
    let mut b = Builder::new(&["x1", "x2", "y", "x"]);
    let inv = Polyhedron::new(
        [closed_interval(0, rat(0, 1), rat(5, 1)), closed_interval(1, rat(0, 1), rat(5, 1)), closed_interval(2, rat(0, 1), rat(1, 1))]
            .into_iter()
            .flatten(),
    );
    // rates of (counter var, y); x has rate 1
    let rate = |k: usize, r: i64, y: i64| {
        let mut v = ints(&[0, 0, y, 1]);
        v[k] = Rational::from_int(r);
        v
    };
    let clock = |rel: Relation, c: i64| LinearConstraint::bound(CLOCK, rel, Rational::from_int(c));
    let at_one = || Polyhedron::new([clock(Relation::Eq, 1)]);
    let below_one = || Polyhedron::new([clock(Relation::Lt, 1)]);
    let reset = || vec![Update::reset(CLOCK)];
    let top = Polyhedron::top;
    let heads: Vec<usize> = m
        .instructions
        .iter()
        .enumerate()
        .map(|(i, ins)| {
            let r = match *ins {
                Instruction::Inc(c, _) | Instruction::Dec(c, _) => rate(c.index(), 6, -1),
                Instruction::IfZero(c, _, _) => rate(c.index(), 1, 0),
                Instruction::Halt => ints(&[0, 0, 0, 1]),
            };
            let id = b.mode(&mode_name(i), r, inv.clone());
            if *ins == Instruction::Halt {
                b.label(id, "halt");
            }
            id
        })
        .collect();
    for (i, ins) in m.instructions.iter().enumerate() {
        let l = heads[i];
        let sub = |b: &mut Builder, s: &str, r: Vec<Rational>| b.mode(&format!("l{i}_{s}"), r, inv.clone());
        match *ins {
            Instruction::Inc(c, next) | Instruction::Dec(c, next) => {
                let k = c.index();
                let drain = if matches!(ins, Instruction::Inc(..)) { -3 } else { -12 };
                let a = sub(&mut b, "A", rate(k, -5, 0));
                let bm = sub(&mut b, "B", rate(k, 5, 0));
                let cm = sub(&mut b, "C", rate(k, drain, 1));
                let dm = sub(&mut b, "D", rate(k, 0, -1));
                let em = sub(&mut b, "E", rate(k, 0, 1));
                b.edge(l, a, Polyhedron::new([clock(Relation::Gt, 0), clock(Relation::Lt, 1)]), reset());
                b.edge(a, bm, at_one(), reset());
                b.edge(bm, cm, at_one(), reset());
                b.edge(cm, dm, top(), reset());
                b.edge(dm, em, at_one(), reset());
                b.edge(em, heads[next], at_one(), reset());
            }
            Instruction::IfZero(c, then, other) => {
                let k = c.index();
                let a = sub(&mut b, "A", rate(k, -1, 0));
                let bm = sub(&mut b, "B", rate(k, 1, -1));
                let cm = sub(&mut b, "C", rate(k, -5, 0));
                let dm = sub(&mut b, "D", rate(k, 5, 0));
                let em = sub(&mut b, "E", rate(k, -1, 1));
                let fm = sub(&mut b, "F", rate(k, 0, -1));
                let gm = sub(&mut b, "G", rate(k, 0, 1));
                b.edge(l, a, at_one(), reset());
                b.edge(a, heads[then], at_one(), reset());
                b.edge(l, bm, Polyhedron::new([clock(Relation::Eq, 0)]), Vec::new());
                b.edge(bm, cm, below_one(), reset());
                b.edge(cm, dm, at_one(), reset());
                b.edge(dm, em, at_one(), reset());
                b.edge(em, fm, below_one(), reset());
                b.edge(fm, gm, at_one(), reset());
                b.edge(gm, heads[other], at_one(), reset());
            }
            Instruction::Halt => {}
        }
    }
    b.finish(&[heads[0]])
}
