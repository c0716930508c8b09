//! Singular hybrid automata: domain types, file format, validation and ranks.

mod format;
mod inline;
mod ranks;
mod validate;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::geometry::{AffineExpr, Polyhedron};
use crate::rational::Rational;

pub use format::{parse_model, to_model_text};
pub use inline::{parse_constraints, parse_valuation, InlineError};
pub use ranks::{infer_ranks, is_cms, NotWeak, RankAssignment, RankClass};
pub use validate::{validate_sha, Diagnostic, Severity};

/// Values of all variables, indexed like `HybridAutomaton::variables`.
pub type Valuation = Vec<Rational>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("syntax error at line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{entity}: {message}")]
    Semantic { entity: String, message: String },
}

impl ModelError {
    pub(crate) fn semantic(entity: impl Into<String>, message: impl Into<String>) -> Self {
        ModelError::Semantic { entity: entity.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateKind {
    Set,
    Add,
}

/// `x := amount` or `x := x + amount`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Update {
    pub var: usize,
    pub kind: UpdateKind,
    pub amount: Rational,
}

impl Update {
    pub fn reset(var: usize) -> Self {
        Update { var, kind: UpdateKind::Set, amount: Rational::zero() }
    }

    pub fn set(var: usize, amount: Rational) -> Self {
        Update { var, kind: UpdateKind::Set, amount }
    }

    pub fn add(var: usize, amount: Rational) -> Self {
        Update { var, kind: UpdateKind::Add, amount }
    }

    pub fn apply(&self, v: &mut [Rational]) {
        match self.kind {
            UpdateKind::Set => v[self.var] = self.amount.clone(),
            UpdateKind::Add => v[self.var] += &self.amount,
        }
    }

    /// Same as `apply` on affine expressions.
    pub fn apply_affine(&self, v: &mut [AffineExpr]) {
        match self.kind {
            UpdateKind::Set => v[self.var] = AffineExpr::constant(self.amount.clone()),
            UpdateKind::Add => v[self.var].constant += &self.amount,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mode {
    pub name: String,
    pub rate: Vec<Rational>,
    pub invariant: Polyhedron,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub from: usize,
    pub action: String,
    pub to: usize,
    pub guard: Polyhedron,
    pub updates: Vec<Update>,
}

impl Transition {
    pub fn apply_updates(&self, v: &[Rational]) -> Valuation {
        let mut out = v.to_vec();
        for u in &self.updates {
            u.apply(&mut out);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HybridAutomaton {
    pub variables: Vec<String>,
    pub modes: Vec<Mode>,
    pub initial: Vec<usize>,
    pub transitions: Vec<Transition>,
    /// Proposition labels per mode.
    pub labels: Vec<BTreeSet<String>>,
}

impl HybridAutomaton {
    pub fn dim(&self) -> usize {
        self.variables.len()
    }

    pub fn mode_index(&self, name: &str) -> Option<usize> {
        self.modes.iter().position(|m| m.name == name)
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == name)
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.transitions.iter().position(|t| t.action == name)
    }

    /// Indices of transitions leaving `m`, in declaration order.
    pub fn outgoing(&self, m: usize) -> impl Iterator<Item = usize> + '_ {
        self.transitions.iter().enumerate().filter(move |(_, t)| t.from == m).map(|(i, _)| i)
    }

    pub fn mode_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.transitions.iter().map(|t| (t.from, t.to))
    }

    pub fn has_updates(&self) -> bool {
        self.transitions.iter().any(|t| !t.updates.is_empty())
    }

    /// `ν + F(m)·t`.
    pub fn flow(&self, m: usize, v: &[Rational], t: &Rational) -> Valuation {
        v.iter().zip(&self.modes[m].rate).map(|(x, r)| x + &(r * t)).collect()
    }

    pub fn format_valuation(&self, v: &[Rational]) -> String {
        self.variables
            .iter()
            .zip(v)
            .map(|(n, x)| format!("{n}={x}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn format_polyhedron(&self, p: &Polyhedron) -> String {
        p.display_with(&self.variables)
    }
}
