//! Two-flop synchronizers on a shared tick grid.
//!
//! Handshake lines are toggle-encoded: every new "buffer full" (or "reset
//! buffer") event flips the line, and the receiving domain compares the
//! synchronized level against the last level it acted upon. A change made by
//! a register at tick `t` is captured by the first destination edge strictly
//! after `t`, so it becomes usable two destination cycles after the cycle it
//! happened in.

pub const SYNC_STAGES: usize = 2;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Synchronizer {
    source: bool,
    previous: bool,
    changed_at: Option<u64>,
    stages: [bool; SYNC_STAGES],
}

impl Synchronizer {
    /// Source register value as seen by an edge at `tick`.
    fn source_at(&self, tick: u64) -> bool {
        match self.changed_at {
            Some(t) if t >= tick => self.previous,
            _ => self.source,
        }
    }

    /// Clocks the flop chain at a destination edge.
    pub fn sample(&mut self, tick: u64) {
        let v = self.source_at(tick);
        self.stages[1] = self.stages[0];
        self.stages[0] = v;
    }

    /// Flips the source line at `tick`.
    pub fn toggle(&mut self, tick: u64) {
        self.previous = self.source_at(tick);
        self.source = !self.previous;
        self.changed_at = Some(tick);
    }

    pub fn source(&self) -> bool {
        self.source
    }

    /// Synchronized level usable by the destination logic.
    pub fn output(&self) -> bool {
        self.stages[SYNC_STAGES - 1]
    }

    pub fn stages(&self) -> [bool; SYNC_STAGES] {
        self.stages
    }
}
