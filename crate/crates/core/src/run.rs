//! Timed runs and lassos with exact replay.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{HybridAutomaton, Valuation};
use crate::rational::Rational;

/// Dwell `dwell` time units in `mode`, then take `action` (a transition index) if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub mode: usize,
    pub dwell: Rational,
    pub action: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimedRun {
    pub start_mode: usize,
    pub start: Valuation,
    pub steps: Vec<Step>,
}

/// A finite prefix followed by a cycle repeated forever.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lasso {
    pub prefix: TimedRun,
    pub cycle: Vec<Step>,
}

/// Appends steps while merging consecutive dwells in the same mode.
#[derive(Debug, Clone, Default)]
pub struct StepBuilder {
    pub steps: Vec<Step>,
}

impl StepBuilder {
    pub fn dwell(&mut self, mode: usize, d: Rational) {
        if let Some(last) = self.steps.last_mut() {
            if last.mode == mode && last.action.is_none() {
                last.dwell += &d;
                return;
            }
        }
        self.steps.push(Step { mode, dwell: d, action: None });
    }

    pub fn take(&mut self, mode: usize, action: usize) {
        if let Some(last) = self.steps.last_mut() {
            if last.mode == mode && last.action.is_none() {
                last.action = Some(action);
                return;
            }
        }
        self.steps.push(Step { mode, dwell: Rational::zero(), action: Some(action) });
    }

    pub fn extend(&mut self, steps: impl IntoIterator<Item = Step>) {
        for s in steps {
            self.dwell(s.mode, s.dwell);
            if let Some(a) = s.action {
                self.take(s.mode, a);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("replay failed at step {step}: {message}")]
pub struct ReplayError {
    pub step: usize,
    pub message: String,
}

fn fail<T>(step: usize, message: impl Into<String>) -> Result<T, ReplayError> {
    Err(ReplayError { step, message: message.into() })
}

/// Executes `steps` from `(mode, v)`, checking invariants at both ends of every
/// dwell (convexity covers the segment), guards before each action and the
/// destination invariant after updates. Returns the final configuration.
pub fn replay_steps(
    h: &HybridAutomaton,
    mut mode: usize,
    mut v: Valuation,
    steps: &[Step],
    offset: usize,
) -> Result<(usize, Valuation), ReplayError> {
    for (i, s) in steps.iter().enumerate() {
        let k = offset + i;
        if s.mode != mode {
            return fail(k, format!("expected mode {}, found {}", h.modes[mode].name, h.modes[s.mode].name));
        }
        if s.dwell.is_negative() {
            return fail(k, "negative dwell");
        }
        let inv = &h.modes[mode].invariant;
        if !inv.contains(&v) {
            return fail(k, format!("{} violates the invariant of {}", h.format_valuation(&v), h.modes[mode].name));
        }
        v = h.flow(mode, &v, &s.dwell);
        if !inv.contains(&v) {
            return fail(k, format!("{} violates the invariant of {}", h.format_valuation(&v), h.modes[mode].name));
        }
        if let Some(a) = s.action {
            let t = &h.transitions[a];
            if t.from != mode {
                return fail(k, format!("action {} does not leave {}", t.action, h.modes[mode].name));
            }
            if !t.guard.contains(&v) {
                return fail(k, format!("guard of {} fails at {}", t.action, h.format_valuation(&v)));
            }
            v = t.apply_updates(&v);
            mode = t.to;
            if !h.modes[mode].invariant.contains(&v) {
                return fail(k, format!("{} violates the invariant of {}", h.format_valuation(&v), h.modes[mode].name));
            }
        }
    }
    Ok((mode, v))
}

impl TimedRun {
    pub fn empty(mode: usize, start: Valuation) -> Self {
        TimedRun { start_mode: mode, start, steps: Vec::new() }
    }

    pub fn replay(&self, h: &HybridAutomaton) -> Result<(usize, Valuation), ReplayError> {
        if !h.modes[self.start_mode].invariant.contains(&self.start) {
            return fail(0, "start valuation violates the start invariant");
        }
        replay_steps(h, self.start_mode, self.start.clone(), &self.steps, 0)
    }

    pub fn duration(&self) -> Rational {
        self.steps.iter().map(|s| s.dwell.clone()).sum()
    }

    /// Modes entered along the run, starting with the start mode.
    pub fn mode_sequence(&self, h: &HybridAutomaton) -> Vec<usize> {
        let mut out = vec![self.start_mode];
        for s in &self.steps {
            if let Some(a) = s.action {
                out.push(h.transitions[a].to);
            }
        }
        out
    }
}

impl Lasso {
    pub fn period(&self) -> Rational {
        self.cycle.iter().map(|s| s.dwell.clone()).sum()
    }

    /// Replays the prefix, then one period of the cycle, which must return to the
    /// exact same configuration after positive elapsed time.
    pub fn replay(&self, h: &HybridAutomaton) -> Result<(usize, Valuation), ReplayError> {
        let (mode, v) = self.prefix.replay(h)?;
        let k = self.prefix.steps.len();
        if self.cycle.is_empty() {
            return fail(k, "empty cycle");
        }
        if !self.period().is_positive() {
            return fail(k, "cycle period is not positive");
        }
        let (m2, v2) = replay_steps(h, mode, v.clone(), &self.cycle, k)?;
        if m2 != mode || v2 != v {
            return fail(k + self.cycle.len(), "cycle does not return to its starting configuration");
        }
        Ok((mode, v))
    }

    /// Modes entered along the cycle, beginning with the cycle's first mode.
    pub fn cycle_modes(&self, h: &HybridAutomaton) -> Vec<usize> {
        let mut out = vec![self.cycle[0].mode];
        for s in &self.cycle {
            if let Some(a) = s.action {
                out.push(h.transitions[a].to);
            }
        }
        if out.len() > 1 {
            out.pop();
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepDoc {
    pub mode: String,
    pub dwell: Rational,
    pub action: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunDoc {
    pub start_mode: String,
    pub start: BTreeMap<String, Rational>,
    pub steps: Vec<StepDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end_mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<BTreeMap<String, Rational>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LassoDoc {
    pub prefix: RunDoc,
    pub cycle: Vec<StepDoc>,
    pub period: Rational,
}

fn valuation_doc(h: &HybridAutomaton, v: &[Rational]) -> BTreeMap<String, Rational> {
    h.variables.iter().cloned().zip(v.iter().cloned()).collect()
}

fn steps_doc(h: &HybridAutomaton, steps: &[Step]) -> Vec<StepDoc> {
    steps
        .iter()
        .map(|s| StepDoc {
            mode: h.modes[s.mode].name.clone(),
            dwell: s.dwell.clone(),
            action: s.action.map(|a| h.transitions[a].action.clone()),
        })
        .collect()
}

fn steps_from_doc(h: &HybridAutomaton, steps: &[StepDoc]) -> Result<Vec<Step>, String> {
    steps
        .iter()
        .map(|s| {
            Ok(Step {
                mode: h.mode_index(&s.mode).ok_or_else(|| format!("unknown mode {}", s.mode))?,
                dwell: s.dwell.clone(),
                action: match &s.action {
                    Some(a) => Some(h.action_index(a).ok_or_else(|| format!("unknown action {a}"))?),
                    None => None,
                },
            })
        })
        .collect()
}

impl TimedRun {
    pub fn to_doc(&self, h: &HybridAutomaton) -> RunDoc {
        let end = self.replay(h).ok();
        RunDoc {
            start_mode: h.modes[self.start_mode].name.clone(),
            start: valuation_doc(h, &self.start),
            steps: steps_doc(h, &self.steps),
            end_mode: end.as_ref().map(|(m, _)| h.modes[*m].name.clone()),
            end: end.as_ref().map(|(_, v)| valuation_doc(h, v)),
        }
    }

    pub fn from_doc(h: &HybridAutomaton, d: &RunDoc) -> Result<TimedRun, String> {
        let start_mode = h.mode_index(&d.start_mode).ok_or_else(|| format!("unknown mode {}", d.start_mode))?;
        let mut start = Vec::new();
        for name in &h.variables {
            start.push(d.start.get(name).cloned().ok_or_else(|| format!("missing start value for {name}"))?);
        }
        Ok(TimedRun { start_mode, start, steps: steps_from_doc(h, &d.steps)? })
    }
}

impl Lasso {
    pub fn to_doc(&self, h: &HybridAutomaton) -> LassoDoc {
        LassoDoc { prefix: self.prefix.to_doc(h), cycle: steps_doc(h, &self.cycle), period: self.period() }
    }

    pub fn from_doc(h: &HybridAutomaton, d: &LassoDoc) -> Result<Lasso, String> {
        Ok(Lasso { prefix: TimedRun::from_doc(h, &d.prefix)?, cycle: steps_from_doc(h, &d.cycle)? })
    }
}
