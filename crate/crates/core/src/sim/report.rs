use std::io::{self, Write};

use serde::Serialize;

use crate::word::Word;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    OffchipRequest,
    BufferFull,
    Write,
    Read,
    Output,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::OffchipRequest => "offchip_request",
            EventKind::BufferFull => "buffer_full",
            EventKind::Write => "write",
            EventKind::Read => "read",
            EventKind::Output => "output",
        }
    }
}

/// One logged event. `address` is the off-chip address for requests, the
/// slot index for level accesses and the output ordinal for outputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Event {
    pub cycle: u64,
    pub kind: EventKind,
    pub level: Option<usize>,
    pub address: u64,
    pub value: Option<Word>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StallCounters {
    /// A read waited for a slot that has not been written yet.
    pub empty_slot: u64,
    /// A read was postponed because a write took the port.
    pub port_conflict: u64,
    /// Level 0 could accept data but the input buffer had none.
    pub offchip_wait: u64,
}

impl std::ops::Sub for StallCounters {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self {
            empty_slot: self.empty_slot - o.empty_slot,
            port_conflict: self.port_conflict - o.port_conflict,
            offchip_wait: self.offchip_wait - o.offchip_wait,
        }
    }
}

/// Result of one `run` call. Counters cover the run window only; preloading
/// beforehand is reported as `preload_cycles`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub total_internal_cycles: u64,
    pub preload_cycles: u64,
    pub outputs: Vec<Word>,
    pub level_reads: Vec<u64>,
    pub level_writes: Vec<u64>,
    pub offchip_requests: Vec<u64>,
    pub osr_loads: u64,
    pub osr_shifted_bits: u64,
    pub stalls: StallCounters,
    /// Structural invariant violations seen by the access monitor.
    pub violations: Vec<String>,
    #[serde(skip)]
    pub events: Vec<Event>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub total_cycles: u64,
    pub preload_cycles: u64,
    pub outputs: usize,
    pub offchip_requests: usize,
    pub level_reads: Vec<u64>,
    pub level_writes: Vec<u64>,
    pub stalls_by_cause: StallCounters,
    pub violations: usize,
}

impl SimReport {
    pub fn summary(&self) -> Summary {
        Summary {
            total_cycles: self.total_internal_cycles,
            preload_cycles: self.preload_cycles,
            outputs: self.outputs.len(),
            offchip_requests: self.offchip_requests.len(),
            level_reads: self.level_reads.clone(),
            level_writes: self.level_writes.clone(),
            stalls_by_cause: self.stalls,
            violations: self.violations.len(),
        }
    }

    /// Cycles per output word, the inverse throughput.
    pub fn cycles_per_output(&self) -> f64 {
        self.total_internal_cycles as f64 / self.outputs.len().max(1) as f64
    }

    /// Writes the event log as `cycle,event_kind,level,address,value`.
    pub fn write_events_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "cycle,event_kind,level,address,value")?;
        for e in &self.events {
            let level = e.level.map(|l| l.to_string()).unwrap_or_default();
            let value = e.value.as_ref().map(|v| v.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{}",
                e.cycle,
                e.kind.as_str(),
                level,
                e.address,
                value
            )?;
        }
        Ok(())
    }
}
