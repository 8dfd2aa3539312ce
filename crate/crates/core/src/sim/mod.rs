//! Cycle-level model of the multi-level memory hierarchy and its two clock
//! domains.

mod cdc;
mod config;
mod level;
mod report;
mod state;

pub use cdc::{Synchronizer, SYNC_STAGES};
pub use config::{
    validate_config, ClockRatio, HierarchyConfig, LevelConfig, OsrConfig, Ports, RuntimeInputs,
    MAX_LEVELS, MAX_WORD_WIDTH,
};
pub use level::{LevelState, Slot};
pub use report::{Event, EventKind, SimReport, StallCounters, Summary};
pub use state::{init_sim, runtime_for_pattern, SimState, Stop, TickEvents};
