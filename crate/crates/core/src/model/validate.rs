use serde::Serialize;

use super::HybridAutomaton;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub entity: String,
    pub message: String,
}

/// Structural checks on mode invariants. Never fails; an empty list means clean.
pub fn validate_sha(h: &HybridAutomaton) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for (i, m) in h.modes.iter().enumerate() {
        let entity = format!("mode {}", m.name);
        if m.invariant.is_empty() {
            let initial = h.initial.contains(&i);
            out.push(Diagnostic {
                severity: if initial { Severity::Error } else { Severity::Warning },
                entity,
                message: if initial {
                    "empty invariant on initial mode".into()
                } else {
                    "empty invariant".into()
                },
            });
        } else if !m.invariant.is_bounded(h.dim()) {
            out.push(Diagnostic {
                severity: Severity::Warning,
                entity,
                message: "unbounded invariant".into(),
            });
        }
    }
    out
}
