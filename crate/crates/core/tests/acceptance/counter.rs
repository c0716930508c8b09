//! Counter-machine encodings against the simulator.

use std::time::{Duration, Instant};

use weakha::gen::{
    counter_trace, encode_counter, gen_counter_machine_cms_clock, gen_counter_machine_sha, parse_counter_machine,
    CmOutcome, CLOCK_CMS_START, SHA_START,
};
use weakha::geometry::Polyhedron;
use weakha::model::HybridAutomaton;
use weakha::run::TimedRun;
use weakha::stats::Stats;
use weakha::symbolic::{bounded_reach, BoundedOutcome};
use weakha::Rational;

use crate::support::{ensure, ints, Ledger};

const HALTING: [&str; 10] = [
    "l0: halt",
    "l0: inc c1 goto l1\nl1: halt",
    "l0: inc c2 goto l1\nl1: halt",
    "l0: inc c1 goto l1\nl1: inc c1 goto l2\nl2: dec c1 goto l3\nl3: halt",
    "l0: inc c1 goto l1\nl1: ifz c1 goto l2 else l3\nl2: halt\nl3: halt",
    "l0: ifz c1 goto l1 else l2\nl1: halt\nl2: halt",
    "l0: inc c1 goto l1\nl1: inc c2 goto l2\nl2: dec c2 goto l3\nl3: ifz c2 goto l4 else l5\nl4: halt\nl5: halt",
    "l0: inc c1 goto l1\nl1: inc c1 goto l2\nl2: ifz c1 goto l4 else l3\nl3: dec c1 goto l2\nl4: halt",
    "l0: inc c1 goto l1\nl1: ifz c1 goto l4 else l2\nl2: dec c1 goto l3\nl3: inc c2 goto l1\nl4: halt",
    "l0: inc c2 goto l1\nl1: inc c2 goto l2\nl2: dec c2 goto l3\nl3: ifz c2 goto l4 else l5\nl4: halt\nl5: halt",
];

/// Loops whose halt instruction is never reached.
const LOOPING: [&str; 3] = [
    "l0: ifz c1 goto l0 else l1\nl1: halt",
    "l0: inc c1 goto l1\nl1: dec c1 goto l2\nl2: ifz c1 goto l0 else l3\nl3: halt",
    "l0: inc c2 goto l1\nl1: ifz c2 goto l2 else l0\nl2: halt",
];

/// Discrete steps allowed per simulated instruction.
const DEPTH_PER_STEP: usize = 10;

fn halt_run(h: &HybridAutomaton, start: &[Rational], depth: usize) -> Result<Option<TimedRun>, String> {
    let halts: Vec<usize> = (0..h.modes.len()).filter(|&m| h.labels[m].contains("halt")).collect();
    match bounded_reach(h, 0, &Polyhedron::point(start), Some(&halts), &Polyhedron::top(), depth, &mut Stats::default()) {
        BoundedOutcome::Reached { run, .. } => Ok(Some(run)),
        BoundedOutcome::NotWithinDepth => Ok(None),
        BoundedOutcome::Unknown(why) => Err(why),
    }
}

/// Instruction modes entered along `run` with the valuation on entry.
fn boundaries(h: &HybridAutomaton, run: &TimedRun) -> Vec<(String, Vec<Rational>)> {
    let (mut mode, mut v) = (run.start_mode, run.start.clone());
    let mut out = vec![(h.modes[mode].name.clone(), v.clone())];
    for s in &run.steps {
        v = h.flow(mode, &v, &s.dwell);
        if let Some(a) = s.action {
            v = h.transitions[a].apply_updates(&v);
            mode = h.transitions[a].to;
            if !h.modes[mode].name.contains('_') {
                out.push((h.modes[mode].name.clone(), v.clone()));
            }
        }
    }
    out
}

pub fn criterion(ledger: &mut Ledger) -> Result<String, String> {
    let began = Instant::now();
    let zero = Rational::zero();
    type Encoding = (&'static str, fn(&weakha::gen::CounterMachine) -> HybridAutomaton, Vec<Rational>);
    let encodings: [Encoding; 2] = [
        ("update encoding", gen_counter_machine_sha, ints(&SHA_START)),
        ("clock encoding", gen_counter_machine_cms_clock, ints(&CLOCK_CMS_START)),
    ];
    let mut boundaries_checked = 0;
    for (i, text) in HALTING.iter().enumerate() {
        let m = parse_counter_machine(text).map_err(|e| e.to_string())?;
        let (trace, out) = counter_trace(&m, 10);
        let CmOutcome::Halted { steps, .. } = out else { return Err(format!("machine {i} does not halt: {out:?}")) };
        for (name, gen, start) in &encodings {
            let h = gen(&m);
            let run = halt_run(&h, start, DEPTH_PER_STEP * steps)
                .map_err(|e| format!("machine {i}, {name}: {e}"))?
                .ok_or(format!("machine {i}, {name}: halt not reached"))?;
            ledger.run(&format!("machine {i} {name}"), &h, &run, None);
            let got = boundaries(&h, &run);
            ensure(got.len() == trace.len(), || format!("machine {i}, {name}: {} instruction entries, expected {}", got.len(), trace.len()))?;
            for ((mode, v), cfg) in got.iter().zip(&trace) {
                let (c1, c2) = (encode_counter(cfg.c1), encode_counter(cfg.c2));
                let expect = if *name == "update encoding" {
                    vec![zero.clone(), c1, c2]
                } else {
                    vec![c1, c2, Rational::one(), zero.clone()]
                };
                ensure(mode == &format!("l{}", cfg.label) && v == &expect, || {
                    format!("machine {i}, {name}: at {mode} found {}, expected l{} with {}", h.format_valuation(v), cfg.label, h.format_valuation(&expect))
                })?;
                boundaries_checked += 1;
            }
        }
    }
    for (i, text) in LOOPING.iter().enumerate() {
        let m = parse_counter_machine(text).map_err(|e| e.to_string())?;
        let out = counter_trace(&m, 10).1;
        ensure(out == CmOutcome::Running, || format!("loop {i}: simulator says {out:?}"))?;
        for (name, gen, start) in &encodings {
            let h = gen(&m);
            let run = halt_run(&h, start, DEPTH_PER_STEP * 10).map_err(|e| format!("loop {i}, {name}: {e}"))?;
            ensure(run.is_none(), || format!("loop {i}, {name}: halt reached symbolically"))?;
        }
    }
    let elapsed = began.elapsed();
    ensure(elapsed < Duration::from_secs(300), || format!("took {elapsed:?}"))?;
    Ok(format!("10 halting and 3 looping machines in both encodings, {boundaries_checked} boundary valuations exact"))
}
