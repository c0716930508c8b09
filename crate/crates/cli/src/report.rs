//! The report printed by every subcommand.

use std::time::Duration;

use serde::Serialize;
use serde_json::{Map, Value};
use weakha::stats::Stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Yes,
    No,
    Holds,
    Counterexample,
    Unknown,
    Error,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Yes | Verdict::Holds => 0,
            Verdict::No | Verdict::Counterexample => 1,
            Verdict::Unknown => 2,
            Verdict::Error => 3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StatsDoc {
    pub lp_calls: usize,
    pub types_enumerated: usize,
    pub types_pruned: usize,
    pub states_explored: usize,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
    pub stats: StatsDoc,
    /// Command-specific facts such as the engine used or a diagnostic.
    #[serde(flatten)]
    pub details: Map<String, Value>,
}

impl Report {
    pub fn new(verdict: Verdict) -> Self {
        Report {
            verdict,
            witness: None,
            stats: StatsDoc { lp_calls: 0, types_enumerated: 0, types_pruned: 0, states_explored: 0, wall_time_ms: 0.0 },
            details: Map::new(),
        }
    }

    pub fn error(message: impl Into<String>) -> Self {
        Report::new(Verdict::Error).with("error", message.into())
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        self.details.insert(key.to_string(), serde_json::to_value(value).expect("report values serialize"));
        self
    }

    pub fn witness(mut self, value: impl Serialize) -> Self {
        self.witness = Some(serde_json::to_value(value).expect("witness serializes"));
        self
    }

    pub fn stats(mut self, s: &Stats) -> Self {
        self.stats.lp_calls = s.lp_calls;
        self.stats.types_enumerated = s.types_enumerated;
        self.stats.types_pruned = s.types_pruned;
        self.stats.states_explored = s.states_explored;
        self
    }

    pub fn timed(mut self, elapsed: Duration) -> Self {
        self.stats.wall_time_ms = elapsed.as_secs_f64() * 1000.0;
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Plain text: one `key: value` line per field, nested values as compact JSON.
    pub fn to_text(&self) -> String {
        let mut out = format!("verdict: {}\n", serde_json::to_value(self.verdict).unwrap().as_str().unwrap());
        for (k, v) in &self.details {
            out.push_str(&format!("{k}: {}\n", plain(v)));
        }
        if let Some(w) = &self.witness {
            out.push_str(&format!("witness: {}\n", serde_json::to_string_pretty(w).unwrap()));
        }
        let s = &self.stats;
        out.push_str(&format!(
            "stats: lp_calls={} types_enumerated={} types_pruned={} states_explored={} wall_time_ms={:.3}\n",
            s.lp_calls, s.types_enumerated, s.types_pruned, s.states_explored, s.wall_time_ms
        ));
        out
    }
}

fn plain(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
