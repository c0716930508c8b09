//! Subcommand handlers. Each returns a report; `Err` means malformed input.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde_json::{json, Value};
use weakha::cms::{build_sched_witness, cms_schedulable, SchedOutcome};
use weakha::gen::{
    gen_counter_machine_cms_clock, gen_counter_machine_sha, gen_robot_example, gen_subset_sum, parse_counter_machine,
    SubsetSumInstance, CLOCK_CMS_START, SHA_START,
};
use weakha::geometry::Polyhedron;
use weakha::ltl::{evaluate_trace, label_trace, parse_ltl, wsha_ltl_check, Letter, LtlFormula, LtlVerdict};
use weakha::model::{
    infer_ranks, is_cms, parse_constraints, parse_model, parse_valuation, to_model_text, validate_sha, HybridAutomaton,
    RankAssignment, Severity, Valuation,
};
use weakha::regions::{
    build_region_graph, onevar_ltl_check, polyhedron_constants, region_reachable, region_schedulable, RegionGraph,
    RegionLasso, RegionReach,
};
use weakha::run::{replay_steps, Lasso, LassoDoc, RunDoc, TimedRun};
use weakha::stats::Stats;
use weakha::symbolic::{bounded_reach, BoundedOutcome};
use weakha::wsha::{wsha_reachable, wsha_schedulable, ReachResult, RunType, SchedResult, SearchOptions};
use weakha::Rational;

use crate::report::{Report, Verdict};

pub type CmdResult = Result<Report, String>;

pub fn load(path: &Path) -> Result<HybridAutomaton, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_model(&text).map_err(|e| format!("{}: {e}", path.display()))
}

/// The automaton restricted to the chosen initial mode, that mode and `ν0`.
pub struct Start {
    pub h: HybridAutomaton,
    pub mode: usize,
    pub v0: Valuation,
}

pub fn start(mut h: HybridAutomaton, mode: Option<&str>, val: &str) -> Result<Start, String> {
    let mode = match mode {
        Some(name) => h.mode_index(name).ok_or_else(|| format!("unknown mode {name}"))?,
        None => *h.initial.first().ok_or("the model has no initial mode")?,
    };
    h.initial = vec![mode];
    let v0 = parse_valuation(val, &h.variables).map_err(|e| format!("--init-val: {e}"))?;
    Ok(Start { h, mode, v0 })
}

pub fn target(h: &HybridAutomaton, text: &str) -> Result<Polyhedron, String> {
    parse_constraints(text, &h.variables).map_err(|e| format!("--target: {e}"))
}

enum Engine {
    Weak(RankAssignment),
    OneVar,
}

fn engine(h: &HybridAutomaton) -> Result<Engine, String> {
    match infer_ranks(h) {
        Ok(r) => Ok(Engine::Weak(r)),
        Err(_) if h.dim() == 1 => Ok(Engine::OneVar),
        Err(e) => Err(format!("not a weak automaton: {e}")),
    }
}

fn region_graph(h: &HybridAutomaton, extra: &[Rational]) -> Result<RegionGraph, String> {
    build_region_graph(h, extra).map_err(|e| e.to_string())
}

fn run_type_doc(h: &HybridAutomaton, ranks: &RankAssignment, rt: &RunType) -> Value {
    let classes: Vec<Vec<&str>> =
        rt.ranks.iter().map(|&r| ranks.classes[r].modes.iter().map(|&m| h.modes[m].name.as_str()).collect()).collect();
    let actions: Vec<&str> = rt.actions.iter().map(|&a| h.transitions[a].action.as_str()).collect();
    json!({ "classes": classes, "actions": actions })
}

fn run_witness(h: &HybridAutomaton, run: &TimedRun) -> Value {
    json!({ "kind": "run", "run": run.to_doc(h) })
}

fn trace_doc(prefix: &[Letter], cycle: &[Letter]) -> Value {
    json!({ "prefix": prefix, "cycle": cycle })
}

fn lasso_witness(h: &HybridAutomaton, lasso: &Lasso, exact: bool) -> Value {
    let (prefix, cycle) = label_trace(h, lasso.prefix.start_mode, &lasso.prefix.steps, &lasso.cycle);
    json!({ "kind": "lasso", "exact": exact, "lasso": lasso.to_doc(h), "trace": trace_doc(&prefix, &cycle) })
}

fn region_lasso_witness(h: &HybridAutomaton, l: &RegionLasso) -> Value {
    json!({
        "kind": "lasso",
        "exact": l.exact,
        "condition": l.condition,
        "lasso": l.lasso.to_doc(h),
        "trace": trace_doc(&l.trace_prefix, &l.trace_cycle),
    })
}

fn one_var_start(s: &Start) -> Rational {
    s.v0[0].clone()
}

pub fn validate(path: &Path) -> CmdResult {
    let h = load(path)?;
    let diags = validate_sha(&h);
    let errors = diags.iter().any(|d| d.severity == Severity::Error);
    let mut r = Report::new(if errors { Verdict::Error } else { Verdict::Yes })
        .with("variables", h.variables.len())
        .with("modes", h.modes.len())
        .with("transitions", h.transitions.len())
        .with("diagnostics", &diags);
    match infer_ranks(&h) {
        Ok(ranks) => {
            let classes: Vec<Vec<&str>> =
                ranks.classes.iter().map(|c| c.modes.iter().map(|&m| h.modes[m].name.as_str()).collect()).collect();
            r = r.with("weak", true).with("cms", is_cms(&h, &ranks)).with("classes", classes);
        }
        Err(e) => {
            r = r.with("weak", false).with("not_weak", e.to_string());
            if h.dim() == 1 {
                r = r.with("engine", "regions");
            } else {
                r.verdict = Verdict::Error;
                r = r.with("error", format!("not a weak automaton: {e}"));
            }
        }
    }
    Ok(r)
}

pub fn reach(s: &Start, tgt: &Polyhedron, opts: SearchOptions, stats: &mut Stats) -> CmdResult {
    let h = &s.h;
    let base = Report::new(Verdict::No).with("target", h.format_polyhedron(tgt));
    match engine(h)? {
        Engine::Weak(ranks) => {
            let out = wsha_reachable(h, &ranks, &s.v0, tgt, opts, stats).map_err(|e| e.to_string())?;
            let r = base.with("engine", "wsha");
            Ok(match out {
                ReachResult::Yes { run_type, run, .. } => {
                    let mut r = r.with("run_type", run_type_doc(h, &ranks, &run_type)).witness(run_witness(h, &run));
                    r.verdict = Verdict::Yes;
                    r
                }
                ReachResult::No => r,
            })
        }
        Engine::OneVar => {
            let x0 = one_var_start(s);
            let mut extra = vec![x0.clone()];
            extra.extend(polyhedron_constants(tgt));
            let rg = region_graph(h, &extra)?;
            stats.states_explored += rg.nodes.len();
            let r = base.with("engine", "regions");
            Ok(match region_reachable(h, &rg, s.mode, &x0, tgt).map_err(|e| e.to_string())? {
                RegionReach::Yes { run, .. } => {
                    let mut r = r.witness(run_witness(h, &run));
                    r.verdict = Verdict::Yes;
                    r
                }
                RegionReach::No => r,
            })
        }
    }
}

pub fn sched(s: &Start, opts: SearchOptions, stats: &mut Stats) -> CmdResult {
    let h = &s.h;
    match engine(h)? {
        Engine::Weak(ranks) if is_cms(h, &ranks) => {
            let r = Report::new(Verdict::No).with("engine", "cms");
            Ok(match cms_schedulable(h, &s.v0, stats).map_err(|e| e.to_string())? {
                SchedOutcome::Yes(sol) => {
                    let lasso = build_sched_witness(h, &s.v0, &sol).map_err(|e| e.to_string())?;
                    let mut r = r.witness(lasso_witness(h, &lasso, true));
                    r.verdict = Verdict::Yes;
                    r
                }
                SchedOutcome::No { direction } => {
                    let d: serde_json::Map<String, Value> = h
                        .variables
                        .iter()
                        .zip(&direction)
                        .map(|(v, c)| (v.clone(), serde_json::to_value(c).unwrap()))
                        .collect();
                    r.with("certificate", json!({ "direction": d, "meaning": "direction . F(m) >= 1 for every mode" }))
                }
            })
        }
        Engine::Weak(ranks) => {
            let r = Report::new(Verdict::No).with("engine", "wsha");
            Ok(match wsha_schedulable(h, &ranks, &s.v0, opts, stats).map_err(|e| e.to_string())? {
                SchedResult::Yes { run_type, lasso, .. } => {
                    let mut r =
                        r.with("run_type", run_type_doc(h, &ranks, &run_type)).witness(lasso_witness(h, &lasso, true));
                    r.verdict = Verdict::Yes;
                    r
                }
                SchedResult::No => r,
            })
        }
        Engine::OneVar => {
            let x0 = one_var_start(s);
            let rg = region_graph(h, std::slice::from_ref(&x0))?;
            stats.states_explored += rg.nodes.len();
            let r = Report::new(Verdict::No).with("engine", "regions");
            Ok(match region_schedulable(h, &rg, s.mode, &x0).map_err(|e| e.to_string())? {
                Some(l) => {
                    let mut r = r.with("condition", l.condition).witness(region_lasso_witness(h, &l));
                    r.verdict = Verdict::Yes;
                    r
                }
                None => r,
            })
        }
    }
}

pub fn ltl(s: &Start, formula: &str, opts: SearchOptions, stats: &mut Stats) -> CmdResult {
    let h = &s.h;
    let phi = parse_ltl(formula).map_err(|e| format!("--formula: {e}"))?;
    let base = Report::new(Verdict::Holds).with("formula", phi.to_string());
    let (engine_name, verdict) = match engine(h)? {
        Engine::Weak(ranks) => {
            let v = wsha_ltl_check(h, &ranks, &phi, &s.v0, opts, stats).map_err(|e| e.to_string())?;
            let v = match v {
                LtlVerdict::Holds { vacuous } => LtlVerdict::Holds { vacuous },
                LtlVerdict::CounterExample(c) => {
                    let w = json!({
                        "kind": "lasso",
                        "exact": true,
                        "classes": c.classes,
                        "boundary": c.boundary,
                        "lasso": c.lasso.to_doc(h),
                        "trace": trace_doc(&c.trace_prefix, &c.trace_cycle),
                    });
                    LtlVerdict::CounterExample(Box::new(w))
                }
            };
            ("wsha", v)
        }
        Engine::OneVar => {
            let x0 = one_var_start(s);
            let v = onevar_ltl_check(h, &phi, s.mode, &x0).map_err(|e| e.to_string())?;
            let v = match v {
                LtlVerdict::Holds { vacuous } => LtlVerdict::Holds { vacuous },
                LtlVerdict::CounterExample(l) => LtlVerdict::CounterExample(Box::new(region_lasso_witness(h, &l))),
            };
            ("regions", v)
        }
    };
    let r = base.with("engine", engine_name);
    Ok(match verdict {
        LtlVerdict::Holds { vacuous } => r.with("vacuous", vacuous),
        LtlVerdict::CounterExample(w) => {
            let mut r = r.witness(*w);
            r.verdict = Verdict::Counterexample;
            r
        }
    })
}

pub fn regions(path: &Path, val: Option<&str>, tgt: Option<&str>) -> Result<(Report, String), String> {
    let h = load(path)?;
    let mut extra = Vec::new();
    if let Some(v) = val {
        extra.extend(parse_valuation(v, &h.variables).map_err(|e| format!("--init-val: {e}"))?);
    }
    if let Some(t) = tgt {
        extra.extend(polyhedron_constants(&target(&h, t)?));
    }
    let rg = region_graph(&h, &extra)?;
    let regions: Vec<String> = (0..rg.regions.len()).map(|r| rg.regions.describe(r)).collect();
    let nodes: Vec<String> = (0..rg.nodes.len()).map(|n| rg.describe_node(&h, n)).collect();
    let report = Report::new(Verdict::Yes)
        .with("regions", regions)
        .with("nodes", nodes)
        .with("edges", rg.edges.len());
    Ok((report, rg.to_dot(&h)))
}

pub fn simulate(s: &Start, init: Option<&str>, tgt: &Polyhedron, depth: usize, stats: &mut Stats) -> CmdResult {
    let h = &s.h;
    let init = match init {
        Some(text) => parse_constraints(text, &h.variables).map_err(|e| format!("--init-poly: {e}"))?,
        None => Polyhedron::point(&s.v0),
    };
    let base = Report::new(Verdict::No).with("engine", "symbolic").with("depth", depth).with("target", h.format_polyhedron(tgt));
    Ok(match bounded_reach(h, s.mode, &init, None, tgt, depth, stats) {
        BoundedOutcome::Reached { run, .. } => {
            let mut r = base.witness(run_witness(h, &run));
            r.verdict = Verdict::Yes;
            r
        }
        BoundedOutcome::NotWithinDepth => base.with("outcome", "not within depth"),
        BoundedOutcome::Unknown(why) => {
            let mut r = base.with("outcome", why);
            r.verdict = Verdict::Unknown;
            r
        }
    })
}

fn write_model(h: &HybridAutomaton, output: Option<&Path>) -> Result<Report, String> {
    let text = to_model_text(h);
    let mut r = Report::new(Verdict::Yes).with("modes", h.modes.len()).with("transitions", h.transitions.len());
    match output {
        Some(p) => {
            fs::write(p, &text).map_err(|e| format!("{}: {e}", p.display()))?;
            r = r.with("output", p.display().to_string());
        }
        None => r = r.with("model", serde_json::from_str::<Value>(&text).map_err(|e| e.to_string())?),
    }
    Ok(r)
}

pub fn gen_subset_sum_cmd(set: &str, k: i64, output: Option<&Path>) -> CmdResult {
    let set = set
        .split(',')
        .map(|x| x.trim().parse::<i64>().map_err(|e| format!("--set: {x:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    let (h, v0, tgt) = gen_subset_sum(&SubsetSumInstance { set, k }).map_err(|e| e.to_string())?;
    Ok(write_model(&h, output)?
        .with("init_mode", &h.modes[h.initial[0]].name)
        .with("init_val", valuation_arg(&h, &v0))
        .with("target", h.format_polyhedron(&tgt)))
}

pub fn gen_counter_machine_cmd(program: &Path, clock: bool, output: Option<&Path>) -> CmdResult {
    let text = fs::read_to_string(program).map_err(|e| format!("{}: {e}", program.display()))?;
    let m = parse_counter_machine(&text).map_err(|e| format!("{}: {e}", program.display()))?;
    let (h, v0): (HybridAutomaton, Vec<Rational>) = if clock {
        (gen_counter_machine_cms_clock(&m), CLOCK_CMS_START.iter().map(|&k| Rational::from_int(k)).collect())
    } else {
        (gen_counter_machine_sha(&m), SHA_START.iter().map(|&k| Rational::from_int(k)).collect())
    };
    let halts: Vec<&str> =
        h.labels.iter().enumerate().filter(|(_, l)| l.contains("halt")).map(|(i, _)| h.modes[i].name.as_str()).collect();
    Ok(write_model(&h, output)?
        .with("init_mode", &h.modes[h.initial[0]].name)
        .with("init_val", valuation_arg(&h, &v0))
        .with("halt_modes", halts))
}

pub fn gen_robot_cmd(output: Option<&Path>) -> CmdResult {
    let (h, v0, tgt) = gen_robot_example();
    Ok(write_model(&h, output)?
        .with("init_mode", &h.modes[h.initial[0]].name)
        .with("init_val", valuation_arg(&h, &v0))
        .with("target", h.format_polyhedron(&tgt)))
}

/// `x=1/2,y=0`, the form accepted by `--init-val`.
fn valuation_arg(h: &HybridAutomaton, v: &[Rational]) -> String {
    h.variables.iter().zip(v).map(|(n, x)| format!("{n}={x}")).collect::<Vec<_>>().join(",")
}

/// Replays the witness of a saved JSON report against the model.
pub fn verify(path: &Path, report_path: &Path) -> CmdResult {
    let h = load(path)?;
    let text = fs::read_to_string(report_path).map_err(|e| format!("{}: {e}", report_path.display()))?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", report_path.display()))?;
    let w = doc.get("witness").ok_or("the report has no witness")?;
    let kind = w.get("kind").and_then(Value::as_str).ok_or("witness without kind")?;
    let checked = match kind {
        "run" => verify_run(&h, w, &doc)?,
        "lasso" => verify_lasso(&h, w, &doc)?,
        other => return Err(format!("unknown witness kind {other}")),
    };
    Ok(match checked {
        Ok(what) => Report::new(Verdict::Yes).with("checked", what),
        Err(why) => Report::new(Verdict::No).with("failure", why),
    })
}

type Check = Result<Vec<String>, String>;

fn verify_run(h: &HybridAutomaton, w: &Value, doc: &Value) -> Result<Check, String> {
    let rd: RunDoc = serde_json::from_value(w["run"].clone()).map_err(|e| format!("witness run: {e}"))?;
    let run = TimedRun::from_doc(h, &rd)?;
    let end = match run.replay(h) {
        Ok((_, v)) => v,
        Err(e) => return Ok(Err(format!("replay: {e}"))),
    };
    let mut done = vec!["replay".to_string()];
    if let Some(t) = doc.get("target").and_then(Value::as_str) {
        let tgt = target(h, t)?;
        if !tgt.contains(&end) {
            return Ok(Err(format!("run ends at {} outside the target", h.format_valuation(&end))));
        }
        done.push("target".into());
    }
    Ok(Ok(done))
}

fn verify_lasso(h: &HybridAutomaton, w: &Value, doc: &Value) -> Result<Check, String> {
    let ld: LassoDoc = serde_json::from_value(w["lasso"].clone()).map_err(|e| format!("witness lasso: {e}"))?;
    let lasso = Lasso::from_doc(h, &ld)?;
    let exact = w.get("exact").and_then(Value::as_bool).unwrap_or(true);
    let mut done = Vec::new();
    if !lasso.period().is_positive() {
        return Ok(Err("cycle period is not positive".into()));
    }
    done.push("period".to_string());
    if exact {
        if let Err(e) = lasso.replay(h) {
            return Ok(Err(format!("replay: {e}")));
        }
        done.push("closed replay".into());
    } else {
        let (mut m, mut v) = match lasso.prefix.replay(h) {
            Ok(x) => x,
            Err(e) => return Ok(Err(format!("prefix replay: {e}"))),
        };
        for k in 0..3 {
            match replay_steps(h, m, v, &lasso.cycle, lasso.prefix.steps.len() + k * lasso.cycle.len()) {
                Ok(x) => (m, v) = x,
                Err(e) => return Ok(Err(format!("cycle replay: {e}"))),
            }
        }
        done.push("replay of three periods".into());
    }
    let (prefix, cycle) = label_trace(h, lasso.prefix.start_mode, &lasso.prefix.steps, &lasso.cycle);
    if let Some(t) = w.get("trace") {
        let want: (Vec<BTreeSet<String>>, Vec<BTreeSet<String>>) = (
            serde_json::from_value(t["prefix"].clone()).map_err(|e| format!("trace: {e}"))?,
            serde_json::from_value(t["cycle"].clone()).map_err(|e| format!("trace: {e}"))?,
        );
        if want != (prefix.clone(), cycle.clone()) {
            return Ok(Err("trace does not match the lasso's labels".into()));
        }
        done.push("trace".into());
    }
    if let Some(f) = doc.get("formula").and_then(Value::as_str) {
        let phi = parse_ltl(f).map_err(|e| format!("report formula: {e}"))?;
        if !evaluate_trace(&LtlFormula::not(phi), &prefix, &cycle) {
            return Ok(Err("trace satisfies the formula".into()));
        }
        done.push("trace violates formula".into());
    }
    Ok(Ok(done))
}
