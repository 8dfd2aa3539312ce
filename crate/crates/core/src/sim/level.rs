//! Per-level pattern registers and slot bookkeeping driven by the MCU.

use super::config::{LevelConfig, Ports};

/// One stored word, tagged with its index in the level's input stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    pub tag: u64,
    pub data: u128,
}

/// Register state of one hierarchy level.
///
/// Words arrive in stream order and land in slot `index mod capacity`. A
/// level whose cycle length fits its capacity keeps a window
/// `[offset, offset + cycle_length)` of its input stream resident and reads it
/// in pattern order. A level whose cycle length exceeds its capacity cannot
/// hold a full cycle and streams instead: every word is read once, in arrival
/// order, and replaced round-robin.
#[derive(Debug, Clone)]
pub struct LevelState {
    slots: Vec<Option<Slot>>,
    ports: Ports,
    banks: u32,
    cycle_length: u64,
    inter_cycle_shift: u64,
    skip_shift: u64,
    streaming: bool,
    written: u64,
    pattern_pointer: u64,
    offset: u64,
    skips: u64,
    data_reload_counter: u64,
    granted: u64,
    stream_reads: u64,
    /// Word presented to the next level (its `read_enable` input).
    pub(crate) latch: Option<Slot>,
    pub write_enable: bool,
    pub read_enable: bool,
    pub last_write_cycle: Option<u64>,
    pub(crate) reads: u64,
    pub(crate) writes: u64,
}

impl LevelState {
    pub fn new(cfg: &LevelConfig, cycle_length: u64, inter_cycle_shift: u64, skip_shift: u64) -> Self {
        let capacity = cfg.capacity();
        let streaming = cycle_length > capacity;
        let mut level = Self {
            slots: vec![None; capacity as usize],
            ports: cfg.ports,
            banks: cfg.banks,
            cycle_length,
            inter_cycle_shift,
            skip_shift,
            streaming,
            written: 0,
            pattern_pointer: 0,
            offset: 0,
            skips: 0,
            data_reload_counter: cycle_length,
            granted: cycle_length,
            stream_reads: 0,
            latch: None,
            write_enable: false,
            read_enable: false,
            last_write_cycle: None,
            reads: 0,
            writes: 0,
        };
        level.grant_next_shift();
        level
    }

    pub fn capacity(&self) -> u64 {
        self.slots.len() as u64
    }

    pub fn ports(&self) -> Ports {
        self.ports
    }

    pub fn is_streaming(&self) -> bool {
        self.streaming
    }

    pub fn writing_pointer(&self) -> usize {
        (self.written % self.capacity()) as usize
    }

    pub fn pattern_pointer(&self) -> u64 {
        self.pattern_pointer
    }

    pub fn offset_pointer(&self) -> usize {
        (self.offset % self.capacity()) as usize
    }

    pub fn data_reload_counter(&self) -> u64 {
        self.data_reload_counter
    }

    pub fn skips(&self) -> u64 {
        self.skips
    }

    /// Total reload credit handed out since reset.
    pub fn granted(&self) -> u64 {
        self.granted
    }

    pub fn written(&self) -> u64 {
        self.written
    }

    pub fn occupancy(&self) -> usize {
        self.slots.iter().filter(|s| s.is_some()).count()
    }

    pub fn is_valid(&self, slot: usize) -> bool {
        self.slots[slot].is_some()
    }

    /// Stream index the next read targets.
    pub fn read_index(&self) -> u64 {
        if self.streaming {
            self.stream_reads
        } else {
            self.offset + self.pattern_pointer
        }
    }

    pub fn read_pointer(&self) -> usize {
        (self.read_index() % self.capacity()) as usize
    }

    pub fn bank_of(&self, slot: usize) -> usize {
        slot % self.banks as usize
    }

    pub fn can_write(&self) -> bool {
        self.slots[self.writing_pointer()].is_none()
            && (self.streaming || self.data_reload_counter > 0)
    }

    pub fn can_read(&self) -> bool {
        matches!(self.slots[self.read_pointer()], Some(s) if s.tag == self.read_index())
    }

    /// Whether a write and a read in the same cycle need the same port.
    pub fn port_conflict(&self, write_slot: usize, read_slot: usize) -> bool {
        match self.ports {
            Ports::Dual => write_slot == read_slot,
            Ports::Single => self.bank_of(write_slot) == self.bank_of(read_slot),
        }
    }

    pub(crate) fn write(&mut self, data: u128) -> usize {
        let slot = self.writing_pointer();
        debug_assert!(self.slots[slot].is_none());
        self.slots[slot] = Some(Slot {
            tag: self.written,
            data,
        });
        self.written += 1;
        if !self.streaming {
            self.data_reload_counter -= 1;
        }
        self.writes += 1;
        slot
    }

    pub(crate) fn read(&mut self) -> Option<Slot> {
        self.reads += 1;
        self.slots[self.read_pointer()]
    }

    /// True when the word at the read pointer leaves the window after this read.
    fn is_final_read(&self) -> bool {
        self.streaming
            || (self.skips == self.skip_shift && self.pattern_pointer < self.inter_cycle_shift)
    }

    /// Called once the consumer of the current read has taken the word.
    pub(crate) fn advance(&mut self) {
        if self.is_final_read() {
            let slot = self.read_pointer();
            self.slots[slot] = None;
        }
        if self.streaming {
            self.stream_reads += 1;
        }
        self.pattern_pointer += 1;
        if self.pattern_pointer == self.cycle_length {
            self.pattern_pointer = 0;
            self.skips += 1;
            if self.skips > self.skip_shift {
                self.skips = 0;
                self.offset += self.inter_cycle_shift;
            }
            self.grant_next_shift();
        }
    }

    /// At the start of a cycle that ends in a shift, credit the words the
    /// shift will expose so they can be fetched into slots freed meanwhile.
    fn grant_next_shift(&mut self) {
        if !self.streaming && self.skips == self.skip_shift && self.inter_cycle_shift > 0 {
            self.data_reload_counter += self.inter_cycle_shift;
            self.granted += self.inter_cycle_shift;
        }
    }
}
