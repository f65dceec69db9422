//! Sweep instrumentation: node-visit and sweep counters incremented inside
//! the sweep loops, so tests can assert the one-visit-per-node-per-direction
//! structure exactly.

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SweepStats {
    /// Nodes touched by forward passes (seeding an input counts as its visit).
    pub forward_visits: u64,
    /// Nodes touched by reverse passes.
    pub reverse_visits: u64,
    pub forward_sweeps: u64,
    pub reverse_sweeps: u64,
}

impl SweepStats {
    pub fn absorb(&mut self, other: SweepStats) {
        self.forward_visits += other.forward_visits;
        self.reverse_visits += other.reverse_visits;
        self.forward_sweeps += other.forward_sweeps;
        self.reverse_sweeps += other.reverse_sweeps;
    }
}
