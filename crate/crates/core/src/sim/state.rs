use std::collections::VecDeque;

use super::cdc::{Synchronizer, SYNC_STAGES};
use super::config::{validate_config, HierarchyConfig, Ports, RuntimeInputs};
use super::level::{LevelState, Slot};
use super::report::{Event, EventKind, SimReport, StallCounters};
use crate::error::{Error, Result};
use crate::pattern::{PatternKind, PatternSpec};
use crate::word::{mask128, Word};

/// When `run` stops.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stop {
    Outputs(usize),
    Cycles(u64),
}

/// What happened during one internal cycle.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TickEvents {
    pub cycle: u64,
    pub writes: Vec<bool>,
    pub reads: Vec<bool>,
    pub output: bool,
    pub offchip_requests: usize,
    pub buffer_fills: usize,
}

impl TickEvents {
    fn progressed(&self) -> bool {
        self.output
            || self.offchip_requests > 0
            || self.buffer_fills > 0
            || self.writes.iter().any(|&w| w)
            || self.reads.iter().any(|&r| r)
    }
}

#[derive(Debug, Clone, Copy)]
struct InFlight {
    address: u64,
    ready_cycle: u64,
}

/// Generates the off-chip request stream feeding level 0.
///
/// When level 0 holds whole cycles, data is fetched once, sequentially from
/// the start address, as far as level 0's reload credit reaches. When level
/// 0 streams, the request addresses walk level 0's own pattern.
#[derive(Debug, Clone)]
struct RequestCursor {
    start: u64,
    words_per_entry: u64,
    streaming: bool,
    cycle_length: u64,
    shift: u64,
    skip_shift: u64,
    pattern_pointer: u64,
    offset: u64,
    skips: u64,
    entries_started: u64,
    sub_word: u64,
    current_entry: u64,
}

impl RequestCursor {
    /// Next off-chip address, if level 0 will accept the data it belongs to.
    fn next(&mut self, level0_credit: u64) -> Option<u64> {
        if self.sub_word == 0 {
            if !self.streaming && self.entries_started >= level0_credit {
                return None;
            }
            self.current_entry = if self.streaming {
                let e = self.offset + self.pattern_pointer;
                self.pattern_pointer += 1;
                if self.pattern_pointer == self.cycle_length {
                    self.pattern_pointer = 0;
                    self.skips += 1;
                    if self.skips > self.skip_shift {
                        self.skips = 0;
                        self.offset += self.shift;
                    }
                }
                e
            } else {
                self.entries_started
            };
            self.entries_started += 1;
        }
        let addr = self.start + self.current_entry * self.words_per_entry + self.sub_word;
        self.sub_word = (self.sub_word + 1) % self.words_per_entry;
        Some(addr)
    }
}

#[derive(Debug, Clone)]
struct OsrState {
    bits: VecDeque<bool>,
    register_width: usize,
    output_width: usize,
    loads: u64,
    shifted_bits: u64,
}

impl OsrState {
    fn fill(&self) -> usize {
        self.bits.len()
    }

    /// Presents the top `output_width` bits and shifts left by `shift`.
    fn emit(&mut self, shift: usize) -> Word {
        let out = Word::from_msb_bits(
            self.bits.iter().take(self.output_width).copied(),
            self.output_width as u32,
        );
        self.bits.drain(..shift);
        self.shifted_bits += shift as u64;
        out
    }

    fn load(&mut self, data: u128, width: u32) {
        for p in (0..width).rev() {
            self.bits.push_back(data >> p & 1 == 1);
        }
        debug_assert!(self.bits.len() <= self.register_width);
        self.loads += 1;
    }
}

#[derive(Debug, Clone, Default)]
struct Monitor {
    violations: Vec<String>,
}

const MAX_RECORDED_VIOLATIONS: usize = 64;

impl Monitor {
    fn flag(&mut self, msg: String) {
        if self.violations.len() < MAX_RECORDED_VIOLATIONS {
            self.violations.push(msg);
        }
    }
}

/// Complete simulator state: both clock domains, every level and the OSR.
#[derive(Debug, Clone)]
pub struct SimState {
    config: HierarchyConfig,
    runtime: RuntimeInputs,
    internal_period: u64,
    external_period: u64,
    internal_cycle: u64,
    next_external_cycle: u64,

    // external domain
    buffer: Vec<u64>,
    buffer_words: usize,
    buffer_held: bool,
    buffer_tag: u64,
    buffer_data: u128,
    reset_seen: bool,
    in_flight: VecDeque<InFlight>,
    cursor: RequestCursor,
    requests: Vec<u64>,
    full_sync: Synchronizer,
    reset_sync: Synchronizer,

    // internal domain
    full_taken: bool,
    levels: Vec<LevelState>,
    osr: Option<OsrState>,
    outputs: Vec<Word>,
    stalls: StallCounters,
    force_disable: bool,
    preload_cycles: u64,
    idle_cycles: u64,

    events: Option<Vec<Event>>,
    monitor: Monitor,
}

/// Validates `config` and `runtime` and builds the reset state.
pub fn init_sim(config: &HierarchyConfig, runtime: &RuntimeInputs) -> Result<SimState> {
    let violations = validate_config(config);
    if !violations.is_empty() {
        return Err(Error::Config(violations));
    }
    runtime.validate(config)?;
    let w0 = config.levels[0].word_width;
    for (i, lv) in config.levels.iter().enumerate().skip(1) {
        if lv.word_width != w0 {
            return Err(Error::validation(
                format!("levels[{i}].word_width"),
                "the simulator moves one word per transfer and needs equal widths on all levels",
            ));
        }
    }

    let levels: Vec<LevelState> = config
        .levels
        .iter()
        .enumerate()
        .map(|(i, cfg)| {
            LevelState::new(
                cfg,
                runtime.cycle_length[i],
                runtime.inter_cycle_shift[i],
                runtime.skip_shift[i],
            )
        })
        .collect();
    let (internal_period, external_period) = config.clock_ratio.periods();
    let buffer_words = (w0 / config.offchip_word_width) as usize;
    let cursor = RequestCursor {
        start: runtime.start_address,
        words_per_entry: buffer_words as u64,
        streaming: levels[0].is_streaming(),
        cycle_length: runtime.cycle_length[0],
        shift: runtime.inter_cycle_shift[0],
        skip_shift: runtime.skip_shift[0],
        pattern_pointer: 0,
        offset: 0,
        skips: 0,
        entries_started: 0,
        sub_word: 0,
        current_entry: 0,
    };
    let osr = config.osr.as_ref().map(|o| OsrState {
        bits: VecDeque::with_capacity(o.register_width as usize),
        register_width: o.register_width as usize,
        output_width: o.output_width as usize,
        loads: 0,
        shifted_bits: 0,
    });

    Ok(SimState {
        config: config.clone(),
        runtime: runtime.clone(),
        internal_period,
        external_period,
        internal_cycle: 0,
        next_external_cycle: 0,
        buffer: Vec::with_capacity(buffer_words),
        buffer_words,
        buffer_held: false,
        buffer_tag: 0,
        buffer_data: 0,
        reset_seen: false,
        in_flight: VecDeque::new(),
        cursor,
        requests: Vec::new(),
        full_sync: Synchronizer::default(),
        reset_sync: Synchronizer::default(),
        full_taken: false,
        levels,
        osr,
        outputs: Vec::new(),
        stalls: StallCounters::default(),
        force_disable: false,
        preload_cycles: 0,
        idle_cycles: 0,
        events: Some(Vec::new()),
        monitor: Monitor::default(),
    })
}

/// Maps a pattern onto the runtime ports, using the same settings on every
/// level. Only patterns the ports can express are accepted.
pub fn runtime_for_pattern(config: &HierarchyConfig, spec: &PatternSpec) -> Result<RuntimeInputs> {
    spec.validate()?;
    let n = config.levels.len();
    let rt = match spec.kind {
        PatternKind::Sequential | PatternKind::Cyclic | PatternKind::ShiftedCyclic => {
            RuntimeInputs::uniform(n, spec.cycle_length, spec.inter_cycle_shift, spec.skip_shift)
                .with_start(spec.base_address)
        }
        other => {
            return Err(Error::validation(
                "pattern.kind",
                format!("{other:?} patterns cannot be expressed through the MCU's runtime ports"),
            ))
        }
    };
    Ok(rt.with_shift_select(u32::from(config.osr.is_some())))
}

impl SimState {
    pub fn config(&self) -> &HierarchyConfig {
        &self.config
    }

    pub fn runtime(&self) -> &RuntimeInputs {
        &self.runtime
    }

    pub fn internal_cycle(&self) -> u64 {
        self.internal_cycle
    }

    /// External cycles simulated so far.
    pub fn external_cycle(&self) -> u64 {
        self.next_external_cycle
    }

    pub fn levels(&self) -> &[LevelState] {
        &self.levels
    }

    pub fn outputs(&self) -> &[Word] {
        &self.outputs
    }

    pub fn offchip_requests(&self) -> &[u64] {
        &self.requests
    }

    pub fn buffer_fill(&self) -> usize {
        self.buffer.len()
    }

    /// Synchronizer pipelines (buffer full into the internal domain, reset
    /// buffer into the external domain).
    pub fn synchronizers(&self) -> (&Synchronizer, &Synchronizer) {
        (&self.full_sync, &self.reset_sync)
    }

    pub fn osr_fill(&self) -> Option<usize> {
        self.osr.as_ref().map(OsrState::fill)
    }

    pub fn osr_loads(&self) -> Option<u64> {
        self.osr.as_ref().map(|o| o.loads)
    }

    pub fn events(&self) -> &[Event] {
        self.events.as_deref().unwrap_or(&[])
    }

    pub fn violations(&self) -> &[String] {
        &self.monitor.violations
    }

    /// Turns event logging on or off. Logging is on after `init_sim`.
    pub fn set_event_logging(&mut self, on: bool) {
        match (on, self.events.is_some()) {
            (true, false) => self.events = Some(Vec::new()),
            (false, true) => self.events = None,
            _ => {}
        }
    }

    fn log(&mut self, kind: EventKind, level: Option<usize>, address: u64, value: Option<Word>) {
        if let Some(ev) = self.events.as_mut() {
            ev.push(Event {
                cycle: self.internal_cycle,
                kind,
                level,
                address,
                value,
            });
        }
    }

    fn output_disabled(&self) -> bool {
        self.runtime.disable_output || self.force_disable
    }

    /// Advances one internal clock cycle together with the external cycles
    /// that fall inside it.
    pub fn step(&mut self) -> TickEvents {
        let c = self.internal_cycle;
        let t0 = c * self.internal_period;
        let t1 = t0 + self.internal_period;
        let mut ev = TickEvents {
            cycle: c,
            ..TickEvents::default()
        };

        self.full_sync.sample(t0);
        while self.next_external_cycle * self.external_period < t1 {
            let e = self.next_external_cycle;
            self.reset_sync.sample(e * self.external_period);
            self.external_logic(e, &mut ev);
            self.next_external_cycle += 1;
        }
        self.internal_cycle_logic(t1, &mut ev);
        self.internal_cycle += 1;
        ev
    }

    fn external_logic(&mut self, e: u64, ev: &mut TickEvents) {
        let tick = e * self.external_period;
        let off_w = self.config.offchip_word_width;

        if self.reset_sync.output() != self.reset_seen {
            self.reset_seen = !self.reset_seen;
            self.buffer.clear();
            self.buffer_held = false;
        }

        while let Some(f) = self.in_flight.front().copied() {
            if f.ready_cycle > e {
                break;
            }
            self.in_flight.pop_front();
            self.buffer.push(f.address);
            if self.buffer.len() == self.buffer_words {
                self.buffer_data = self.buffer.iter().fold(0u128, |acc, &a| {
                    (acc << off_w) | (a as u128 & mask128(off_w))
                });
                self.buffer_held = true;
                self.full_sync.toggle(tick);
                ev.buffer_fills += 1;
                let w = Word::from_u128(self.buffer_data, self.config.levels[0].word_width);
                let tag = self.buffer_tag;
                self.log(EventKind::BufferFull, None, tag, Some(w));
            }
        }

        if !self.buffer_held && self.buffer.len() + self.in_flight.len() < self.buffer_words {
            if let Some(address) = self.cursor.next(self.levels[0].granted()) {
                self.in_flight.push_back(InFlight {
                    address,
                    ready_cycle: e + self.config.offchip_latency as u64,
                });
                self.requests.push(address);
                ev.offchip_requests += 1;
                self.log(EventKind::OffchipRequest, None, address, None);
            }
        }
    }

    fn internal_cycle_logic(&mut self, end_tick: u64, ev: &mut TickEvents) {
        let c = self.internal_cycle;
        let n = self.levels.len();
        let disabled = self.output_disabled();
        let buffer_ready = self.full_sync.output() != self.full_taken;
        let last_width = self.config.levels[n - 1].word_width;

        // decisions, all on start-of-cycle state
        let writes: Vec<bool> = (0..n)
            .map(|k| {
                let source = if k == 0 {
                    buffer_ready
                } else {
                    self.levels[k - 1].latch.is_some()
                };
                source && self.levels[k].can_write()
            })
            .collect();
        if !buffer_ready && self.levels[0].can_write() {
            self.stalls.offchip_wait += 1;
        }

        let shift_select = self.runtime.shift_select as usize;
        let (osr_shift, consumer_accepts) = match (&self.osr, &self.config.osr) {
            (Some(o), Some(cfg)) => {
                let shift = match shift_select {
                    0 => None,
                    s => Some(cfg.available_shifts[s - 1] as usize),
                };
                let emit = shift.filter(|&s| !disabled && o.fill() >= s.max(o.output_width));
                let after = o.fill() - emit.unwrap_or(0);
                (emit, o.register_width - after >= last_width as usize)
            }
            _ => (None, !disabled),
        };

        let mut reads = vec![false; n];
        for k in 0..n {
            let lv = &self.levels[k];
            let wants = if k + 1 < n {
                lv.latch.is_none()
            } else {
                consumer_accepts
            };
            if !wants {
                continue;
            }
            let hungry = k + 1 == n || self.levels[k + 1].can_write();
            if !lv.can_read() {
                if hungry {
                    self.stalls.empty_slot += 1;
                }
                continue;
            }
            if writes[k] && lv.port_conflict(lv.writing_pointer(), lv.read_pointer()) {
                if hungry {
                    self.stalls.port_conflict += 1;
                }
                continue;
            }
            reads[k] = true;
        }

        // OSR emits from the bits it held at the start of the cycle
        if let Some(shift) = osr_shift {
            let word = self.osr.as_mut().expect("osr configured").emit(shift);
            let idx = self.outputs.len() as u64;
            self.log(EventKind::Output, None, idx, Some(word.clone()));
            self.outputs.push(word);
            ev.output = true;
        }

        let mut written = vec![None; n];
        for k in 0..n {
            if !writes[k] {
                continue;
            }
            let data = if k == 0 {
                self.full_taken = !self.full_taken;
                self.reset_sync.toggle(end_tick);
                self.buffer_tag += 1;
                self.buffer_data
            } else {
                let upstream = &mut self.levels[k - 1];
                let word = upstream.latch.take().expect("write needs a presented word");
                upstream.advance();
                word.data
            };
            if self.levels[k].ports() == Ports::Single && self.levels[k].last_write_cycle == Some(c.wrapping_sub(1)) {
                self.monitor
                    .flag(format!("cycle {c}: level {k} single-ported write on consecutive cycles"));
            }
            let slot = self.levels[k].write(data);
            written[k] = Some(slot);
            self.levels[k].last_write_cycle = Some(c);
            let w = self.config.levels[k].word_width;
            self.log(EventKind::Write, Some(k), slot as u64, Some(Word::from_u128(data, w)));
        }

        for k in 0..n {
            if !reads[k] {
                continue;
            }
            let lv = &self.levels[k];
            let slot = lv.read_pointer();
            let expected_tag = lv.read_index();
            if let Some(w) = written[k] {
                if w == slot {
                    self.monitor
                        .flag(format!("cycle {c}: level {k} read and wrote slot {slot} together"));
                } else if lv.ports() == Ports::Single && lv.port_conflict(w, slot) {
                    self.monitor
                        .flag(format!("cycle {c}: level {k} single port used for read and write"));
                }
            }
            let word = self.levels[k].read();
            let data = match word {
                Some(Slot { tag, data }) if tag == expected_tag => data,
                other => {
                    self.monitor.flag(format!(
                        "cycle {c}: level {k} read invalid slot {slot} (holds {other:?}, wanted stream index {expected_tag})"
                    ));
                    other.map_or(0, |s| s.data)
                }
            };
            let w = self.config.levels[k].word_width;
            self.log(EventKind::Read, Some(k), slot as u64, Some(Word::from_u128(data, w)));
            let tag = word.map_or(u64::MAX, |s| s.tag);
            if k + 1 < n {
                self.levels[k].latch = Some(Slot { tag, data });
            } else {
                match self.osr.as_mut() {
                    Some(osr) => osr.load(data, last_width),
                    None => {
                        let out = Word::from_u128(data, last_width);
                        let idx = self.outputs.len() as u64;
                        self.log(EventKind::Output, None, idx, Some(out.clone()));
                        self.outputs.push(out);
                        ev.output = true;
                    }
                }
                self.levels[k].advance();
            }
        }

        for k in 0..n {
            self.levels[k].write_enable = writes[k];
            self.levels[k].read_enable = self.levels[k].latch.is_some() || (k + 1 == n && reads[k]);
        }
        ev.writes = writes;
        ev.reads = reads;
    }

    /// Steps with output disabled for `budget` cycles so the hierarchy fills
    /// ahead of the run, then restores the runtime flag.
    pub fn preload(&mut self, budget: u64) {
        let saved = self.force_disable;
        self.force_disable = true;
        for _ in 0..budget {
            self.step();
        }
        self.force_disable = saved;
        self.preload_cycles += budget;
    }

    /// Preloads until the hierarchy stops taking data for `quiet` cycles, at
    /// most `max_budget` cycles. Returns the cycles spent.
    pub fn preload_until_full(&mut self, quiet: u64, max_budget: u64) -> u64 {
        let saved = self.force_disable;
        self.force_disable = true;
        let mut spent = 0;
        let mut idle = 0;
        while spent < max_budget && idle < quiet {
            let ev = self.step();
            spent += 1;
            if ev.progressed() {
                idle = 0;
            } else {
                idle += 1;
            }
        }
        self.force_disable = saved;
        self.preload_cycles += spent;
        spent
    }

    /// Restarts with new pattern settings; equivalent to a fresh `init_sim`.
    pub fn reset_with(&mut self, runtime: &RuntimeInputs) -> Result<()> {
        let logging = self.events.is_some();
        *self = init_sim(&self.config, runtime)?;
        self.set_event_logging(logging);
        Ok(())
    }

    /// Cycles without any activity after which a run that still expects
    /// outputs is declared deadlocked.
    fn deadlock_threshold(&self) -> u64 {
        let ext_in_int = self.external_period.div_ceil(self.internal_period).max(1);
        let handshake = (SYNC_STAGES as u64 + 1) * 2
            + (SYNC_STAGES as u64 + self.config.offchip_latency as u64 + self.buffer_words as u64 + 1)
                * ext_in_int;
        let osr_words = self
            .config
            .osr
            .as_ref()
            .map_or(0, |o| o.register_width as u64);
        self.config.total_capacity() + osr_words + handshake
    }

    fn stalled_level(&self) -> usize {
        self.levels
            .iter()
            .position(|lv| !lv.can_read())
            .unwrap_or(self.levels.len() - 1)
    }

    pub fn run(&mut self, stop: Stop) -> Result<SimReport> {
        let start_cycle = self.internal_cycle;
        let start_outputs = self.outputs.len();
        let start_requests = self.requests.len();
        let start_events = self.events().len();
        let start_reads: Vec<u64> = self.levels.iter().map(|l| l.reads).collect();
        let start_writes: Vec<u64> = self.levels.iter().map(|l| l.writes).collect();
        let start_stalls = self.stalls;
        let (start_loads, start_shifted) = self
            .osr
            .as_ref()
            .map_or((0, 0), |o| (o.loads, o.shifted_bits));
        let threshold = self.deadlock_threshold();
        self.idle_cycles = 0;

        loop {
            let done = match stop {
                Stop::Outputs(n) => self.outputs.len() - start_outputs >= n,
                Stop::Cycles(m) => self.internal_cycle - start_cycle >= m,
            };
            if done {
                break;
            }
            let ev = self.step();
            if ev.progressed() {
                self.idle_cycles = 0;
            } else {
                self.idle_cycles += 1;
            }
            if matches!(stop, Stop::Outputs(_)) && self.idle_cycles > threshold {
                let level = self.stalled_level();
                return Err(Error::Deadlock {
                    cycle: self.internal_cycle,
                    level,
                    detail: format!(
                        "no activity for {} cycles; output disabled: {}; occupancy {:?}",
                        self.idle_cycles,
                        self.output_disabled(),
                        self.levels.iter().map(LevelState::occupancy).collect::<Vec<_>>()
                    ),
                });
            }
        }

        let (loads, shifted) = self
            .osr
            .as_ref()
            .map_or((0, 0), |o| (o.loads, o.shifted_bits));
        Ok(SimReport {
            total_internal_cycles: self.internal_cycle - start_cycle,
            preload_cycles: self.preload_cycles,
            outputs: self.outputs[start_outputs..].to_vec(),
            level_reads: self
                .levels
                .iter()
                .zip(&start_reads)
                .map(|(l, s)| l.reads - s)
                .collect(),
            level_writes: self
                .levels
                .iter()
                .zip(&start_writes)
                .map(|(l, s)| l.writes - s)
                .collect(),
            offchip_requests: self.requests[start_requests..].to_vec(),
            osr_loads: loads - start_loads,
            osr_shifted_bits: shifted - start_shifted,
            stalls: self.stalls - start_stalls,
            violations: self.monitor.violations.clone(),
            events: self.events().get(start_events..).unwrap_or(&[]).to_vec(),
        })
    }
}
