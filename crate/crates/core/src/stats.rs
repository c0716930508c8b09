use serde::Serialize;

/// Work counters reported alongside verdicts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Stats {
    pub lp_calls: usize,
    pub types_enumerated: usize,
    pub types_pruned: usize,
    pub states_explored: usize,
}

impl Stats {
    pub fn absorb(&mut self, other: &Stats) {
        self.lp_calls += other.lp_calls;
        self.types_enumerated += other.types_enumerated;
        self.types_pruned += other.types_pruned;
        self.states_explored += other.states_explored;
    }
}
