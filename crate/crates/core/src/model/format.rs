use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::{HybridAutomaton, Mode, ModelError, Transition, Update, UpdateKind};
use crate::geometry::{LinearConstraint, Polyhedron, Relation};
use crate::rational::Rational;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    variables: Vec<String>,
    modes: Vec<RawMode>,
    initial: Vec<String>,
    #[serde(default)]
    transitions: Vec<RawTransition>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    labels: BTreeMap<String, Vec<String>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMode {
    name: String,
    rate: Vec<Rational>,
    #[serde(default)]
    invariant: Vec<RawConstraint>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTransition {
    from: String,
    action: String,
    to: String,
    #[serde(default)]
    guard: Vec<RawConstraint>,
    #[serde(default)]
    updates: Vec<RawUpdate>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawUpdate {
    var: String,
    kind: UpdateKind,
    amount: Rational,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstraint {
    lhs: BTreeMap<String, Rational>,
    op: Relation,
    rhs: Rational,
}

/// Parses a model document.
pub fn parse_model(text: &str) -> Result<HybridAutomaton, ModelError> {
    let raw: RawModel = serde_json::from_str(text)
        .map_err(|e| ModelError::Syntax { line: e.line(), message: e.to_string() })?;
    build(raw)
}

fn unique<'a>(names: impl IntoIterator<Item = &'a String>, what: &str) -> Result<(), ModelError> {
    let mut seen = HashSet::new();
    for n in names {
        if !seen.insert(n) {
            return Err(ModelError::semantic(format!("{what} {n}"), format!("duplicate {what}")));
        }
    }
    Ok(())
}

fn build(raw: RawModel) -> Result<HybridAutomaton, ModelError> {
    unique(&raw.variables, "variable")?;
    unique(raw.modes.iter().map(|m| &m.name), "mode")?;
    unique(raw.transitions.iter().map(|t| &t.action), "action")?;

    let var = |entity: &str, name: &str| -> Result<usize, ModelError> {
        raw.variables
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| ModelError::semantic(entity, format!("unknown variable {name}")))
    };
    let mode = |entity: &str, name: &str| -> Result<usize, ModelError> {
        raw.modes
            .iter()
            .position(|m| m.name == name)
            .ok_or_else(|| ModelError::semantic(entity, format!("unknown mode {name}")))
    };
    let poly = |entity: &str, cs: &[RawConstraint]| -> Result<Polyhedron, ModelError> {
        let mut out = Vec::new();
        for c in cs {
            let mut coeffs = Vec::new();
            for (v, k) in &c.lhs {
                coeffs.push((var(entity, v)?, k.clone()));
            }
            out.push(LinearConstraint::new(coeffs, c.op, c.rhs.clone()));
        }
        Ok(Polyhedron::new(out))
    };

    let mut modes = Vec::new();
    for m in &raw.modes {
        let entity = format!("mode {}", m.name);
        if m.rate.len() != raw.variables.len() {
            return Err(ModelError::semantic(
                entity,
                format!("rate has {} entries, expected {}", m.rate.len(), raw.variables.len()),
            ));
        }
        modes.push(Mode { name: m.name.clone(), rate: m.rate.clone(), invariant: poly(&entity, &m.invariant)? });
    }

    if raw.initial.is_empty() {
        return Err(ModelError::semantic("initial", "no initial mode"));
    }
    let mut initial = Vec::new();
    for n in &raw.initial {
        let i = mode("initial", n)?;
        if !initial.contains(&i) {
            initial.push(i);
        }
    }

    let mut transitions = Vec::new();
    for t in &raw.transitions {
        let entity = format!("action {}", t.action);
        let mut updates = Vec::new();
        for u in &t.updates {
            updates.push(Update { var: var(&entity, &u.var)?, kind: u.kind, amount: u.amount.clone() });
        }
        transitions.push(Transition {
            from: mode(&entity, &t.from)?,
            action: t.action.clone(),
            to: mode(&entity, &t.to)?,
            guard: poly(&entity, &t.guard)?,
            updates,
        });
    }

    let mut labels = vec![BTreeSet::new(); modes.len()];
    for (m, props) in &raw.labels {
        let i = mode("labels", m)?;
        labels[i].extend(props.iter().cloned());
    }

    Ok(HybridAutomaton { variables: raw.variables, modes, initial, transitions, labels })
}

fn raw_poly(h: &HybridAutomaton, p: &Polyhedron) -> Vec<RawConstraint> {
    if p.is_bottom_marker() {
        return vec![RawConstraint { lhs: BTreeMap::new(), op: Relation::Lt, rhs: Rational::zero() }];
    }
    p.constraints
        .iter()
        .map(|c| RawConstraint {
            lhs: c.coeffs.iter().map(|(v, k)| (h.variables[*v].clone(), k.clone())).collect(),
            op: c.rel,
            rhs: c.rhs.clone(),
        })
        .collect()
}

/// Serializes a model so that `parse_model` reproduces it.
pub fn to_model_text(h: &HybridAutomaton) -> String {
    let raw = RawModel {
        variables: h.variables.clone(),
        modes: h
            .modes
            .iter()
            .map(|m| RawMode { name: m.name.clone(), rate: m.rate.clone(), invariant: raw_poly(h, &m.invariant) })
            .collect(),
        initial: h.initial.iter().map(|&i| h.modes[i].name.clone()).collect(),
        transitions: h
            .transitions
            .iter()
            .map(|t| RawTransition {
                from: h.modes[t.from].name.clone(),
                action: t.action.clone(),
                to: h.modes[t.to].name.clone(),
                guard: raw_poly(h, &t.guard),
                updates: t
                    .updates
                    .iter()
                    .map(|u| RawUpdate { var: h.variables[u.var].clone(), kind: u.kind, amount: u.amount.clone() })
                    .collect(),
            })
            .collect(),
        labels: h
            .labels
            .iter()
            .enumerate()
            .filter(|(_, l)| !l.is_empty())
            .map(|(i, l)| (h.modes[i].name.clone(), l.iter().cloned().collect()))
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&raw).expect("model serializes");
    s.push('\n');
    s
}
