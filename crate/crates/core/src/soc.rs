//! Event-driven model of the target SoC.
//!
//! The modeled device is a TrustZone-enabled heterogeneous SoC: two processor
//! cores share one clock source, four gateable clocks feed the programmable
//! logic, and external memory is partitioned into secure and non-secure
//! regions. The clock controller is the shared resource every covert channel
//! in this crate abuses: secure masters may write its registers, the
//! non-secure core may only read them, and the PL clocks are capped at
//! 250 MHz.
//!
//! Everything is deterministic. Time is integer nanoseconds and register
//! writes take effect instantaneously at their scheduled instant.

use std::fmt;

use thiserror::Error;

/// Hard cap on the four programmable-logic clocks.
pub const PL_CLOCK_MAX_HZ: u64 = 250_000_000;

// ---------------------------------------------------------------------------
// Time and frequency
// ---------------------------------------------------------------------------

/// Simulation instant in integer nanoseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub const fn from_ns(ns: u64) -> Self {
        SimTime(ns)
    }

    pub const fn as_ns(self) -> u64 {
        self.0
    }

    /// Instant `ns` nanoseconds later.
    pub const fn offset(self, ns: u64) -> Self {
        SimTime(self.0 + ns)
    }

    /// Duration in nanoseconds since `earlier`. Panics if `earlier` is later.
    pub fn since(self, earlier: SimTime) -> u64 {
        self.0.checked_sub(earlier.0).expect("time went backwards")
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ns", self.0)
    }
}

/// Clock frequency in hertz. Always positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FrequencyHz(u64);

impl FrequencyHz {
    pub fn from_hz(hz: u64) -> Self {
        assert!(hz > 0, "frequency must be positive");
        FrequencyHz(hz)
    }

    pub const fn from_mhz(mhz: u64) -> Self {
        assert!(mhz > 0, "frequency must be positive");
        FrequencyHz(mhz * 1_000_000)
    }

    pub const fn as_hz(self) -> u64 {
        self.0
    }
}

impl fmt::Display for FrequencyHz {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_multiple_of(1_000_000) {
            write!(f, "{} MHz", self.0 / 1_000_000)
        } else {
            write!(f, "{} Hz", self.0)
        }
    }
}

/// Wall time of `cycles` clock cycles at `freq`, rounded half up to whole
/// nanoseconds.
pub fn cycles_to_ns(cycles: u64, freq: FrequencyHz) -> u64 {
    let f = freq.as_hz() as u128;
    ((cycles as u128 * 1_000_000_000 + f / 2) / f) as u64
}

// ---------------------------------------------------------------------------
// Masters and clocks
// ---------------------------------------------------------------------------

/// TrustZone security state of a bus master or memory region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SecurityState {
    Secure,
    NonSecure,
}

/// Bus masters of the modeled SoC. The security wiring is fixed: core 0 and
/// the secure PL IP live in the secure world, core 1 and the non-secure PL IP
/// in the normal world.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MasterId {
    Core0,
    Core1,
    PlIpSecure,
    PlIpNonSecure,
}

impl MasterId {
    pub const ALL: [MasterId; 4] = [
        MasterId::Core0,
        MasterId::Core1,
        MasterId::PlIpSecure,
        MasterId::PlIpNonSecure,
    ];

    pub fn security(self) -> SecurityState {
        match self {
            MasterId::Core0 | MasterId::PlIpSecure => SecurityState::Secure,
            MasterId::Core1 | MasterId::PlIpNonSecure => SecurityState::NonSecure,
        }
    }

    /// Clock-register write permission: secure masters and PL masters may
    /// write, the non-secure core may only read.
    pub fn may_write_clocks(self) -> bool {
        self != MasterId::Core1
    }
}

/// Clocks owned by the SoC clock controller. `CpuClk` drives both cores and
/// is never gated; `Fclk0..3` feed the programmable logic only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClockId {
    CpuClk,
    Fclk0,
    Fclk1,
    Fclk2,
    Fclk3,
}

impl ClockId {
    pub const ALL: [ClockId; 5] = [
        ClockId::CpuClk,
        ClockId::Fclk0,
        ClockId::Fclk1,
        ClockId::Fclk2,
        ClockId::Fclk3,
    ];

    pub fn is_programmable_logic(self) -> bool {
        self != ClockId::CpuClk
    }

    pub fn name(self) -> &'static str {
        match self {
            ClockId::CpuClk => "cpu_clk",
            ClockId::Fclk0 => "fclk0",
            ClockId::Fclk1 => "fclk1",
            ClockId::Fclk2 => "fclk2",
            ClockId::Fclk3 => "fclk3",
        }
    }

    fn index(self) -> usize {
        match self {
            ClockId::CpuClk => 0,
            ClockId::Fclk0 => 1,
            ClockId::Fclk1 => 2,
            ClockId::Fclk2 => 3,
            ClockId::Fclk3 => 4,
        }
    }
}

/// Gate state of a clock at some instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateState {
    Running,
    Off,
}

// ---------------------------------------------------------------------------
// Traces
// ---------------------------------------------------------------------------

/// One constant-frequency stretch of a clock's history.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FreqSegment {
    pub start: SimTime,
    pub freq: FrequencyHz,
    pub duration_ns: u64,
}

impl FreqSegment {
    pub fn end(&self) -> SimTime {
        self.start.offset(self.duration_ns)
    }

    /// Whether `t` falls inside this segment. A segment owns its start
    /// instant and excludes its end instant.
    pub fn contains(&self, t: SimTime) -> bool {
        self.start <= t && t < self.end()
    }
}

/// Time-ordered, contiguous sequence of frequency segments. This is the
/// physical observable of every frequency-keyed channel.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrequencyTrace {
    segments: Vec<FreqSegment>,
}

impl FrequencyTrace {
    pub fn new() -> Self {
        FrequencyTrace::default()
    }

    pub fn segments(&self) -> &[FreqSegment] {
        &self.segments
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn start_time(&self) -> Option<SimTime> {
        self.segments.first().map(|s| s.start)
    }

    pub fn end_time(&self) -> Option<SimTime> {
        self.segments.last().map(|s| s.end())
    }

    pub fn total_duration_ns(&self) -> u64 {
        self.segments.iter().map(|s| s.duration_ns).sum()
    }

    /// Append a segment. The trace stays contiguous: the new segment must
    /// start where the last one ends. Adjacent segments at the same frequency
    /// coalesce.
    pub fn push(&mut self, at: SimTime, freq: FrequencyHz, duration_ns: u64) {
        assert!(duration_ns > 0, "segments must have positive duration");
        if let Some(last) = self.segments.last_mut() {
            assert_eq!(last.end(), at, "trace must stay contiguous");
            if last.freq == freq {
                last.duration_ns += duration_ns;
                return;
            }
        }
        self.segments.push(FreqSegment {
            start: at,
            freq,
            duration_ns,
        });
    }

    /// Frequency in force at `t`, if `t` falls inside the trace.
    pub fn sample_at(&self, t: SimTime) -> Option<FrequencyHz> {
        let idx = self.segments.partition_point(|s| s.start <= t);
        if idx == 0 {
            return None;
        }
        let seg = &self.segments[idx - 1];
        seg.contains(t).then_some(seg.freq)
    }

    /// CSV rows (no header) in the shared trace schema.
    pub fn csv_rows(&self, clock: &str) -> String {
        let mut out = String::new();
        for s in &self.segments {
            out.push_str(&format!(
                "{},{},{},{},run\n",
                clock,
                s.start.as_ns(),
                s.duration_ns,
                s.freq.as_hz()
            ));
        }
        out
    }
}

/// One activation window of a gated clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GateBurst {
    pub start: SimTime,
    pub freq: FrequencyHz,
    pub cycles: u64,
}

impl GateBurst {
    pub fn duration_ns(&self) -> u64 {
        cycles_to_ns(self.cycles, self.freq)
    }

    pub fn end(&self) -> SimTime {
        self.start.offset(self.duration_ns())
    }
}

/// Ordered, non-overlapping activation bursts of a gated clock. The clock is
/// off in the gaps between bursts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GateTrace {
    bursts: Vec<GateBurst>,
}

impl GateTrace {
    pub fn new() -> Self {
        GateTrace::default()
    }

    pub fn bursts(&self) -> &[GateBurst] {
        &self.bursts
    }

    pub fn is_empty(&self) -> bool {
        self.bursts.is_empty()
    }

    pub fn start_time(&self) -> Option<SimTime> {
        self.bursts.first().map(|b| b.start)
    }

    pub fn end_time(&self) -> Option<SimTime> {
        self.bursts.last().map(|b| b.end())
    }

    pub fn push(&mut self, burst: GateBurst) {
        if let Some(last) = self.bursts.last() {
            assert!(last.end() <= burst.start, "bursts must not overlap");
        }
        self.bursts.push(burst);
    }

    /// CSV rows (no header): one `run` row per burst, one `off` row per gap
    /// between bursts. Gap rows carry the register frequency still in force,
    /// i.e. the previous burst's frequency.
    pub fn csv_rows(&self, clock: &str) -> String {
        let mut out = String::new();
        let mut prev: Option<&GateBurst> = None;
        for b in &self.bursts {
            if let Some(p) = prev {
                let gap = b.start.since(p.end());
                if gap > 0 {
                    out.push_str(&format!(
                        "{},{},{},{},off\n",
                        clock,
                        p.end().as_ns(),
                        gap,
                        p.freq.as_hz()
                    ));
                }
            }
            out.push_str(&format!(
                "{},{},{},{},run\n",
                clock,
                b.start.as_ns(),
                b.duration_ns(),
                b.freq.as_hz()
            ));
            prev = Some(b);
        }
        out
    }
}

/// Header line of the trace CSV schema.
pub const TRACE_CSV_HEADER: &str = "clock,start_ns,duration_ns,freq_hz,gate";

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SocError {
    #[error("{master:?} denied access to {resource}")]
    PermissionDenied {
        master: MasterId,
        resource: &'static str,
    },
    #[error("{freq} exceeds the 250 MHz cap of {clock:?}")]
    FrequencyOutOfRange { clock: ClockId, freq: FrequencyHz },
    #[error("action at {at} precedes controller time {now}")]
    TimeRegression { at: SimTime, now: SimTime },
    #[error("{clock:?} has no register value at {at}")]
    NoSegment { clock: ClockId, at: SimTime },
    #[error("{clock:?} cannot be gated")]
    NotGateable { clock: ClockId },
    #[error("burst at {at} overlaps an earlier burst on {clock:?}")]
    Overlap { clock: ClockId, at: SimTime },
    #[error("{clock:?} already has an action at {at}")]
    SameInstantConflict { clock: ClockId, at: SimTime },
    #[error("a clock burst needs at least one cycle")]
    ZeroCycles,
    #[error("address {address:#010x} is not mapped")]
    UnmappedAddress { address: u64 },
    #[error("memory regions overlap at {address:#010x}")]
    RegionOverlap { address: u64 },
}

// ---------------------------------------------------------------------------
// Clock controller
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct ClockState {
    /// Register write history: (instant, value), strictly increasing instants.
    writes: Vec<(SimTime, FrequencyHz)>,
    bursts: Vec<GateBurst>,
}

/// Register file of the SoC clock controller, with the full per-clock history
/// recorded so traces can be read back after a run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClockController {
    now: SimTime,
    clocks: [ClockState; 5],
}

impl ClockController {
    pub fn new() -> Self {
        ClockController::default()
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    /// Write a clock register. Secure masters and PL masters may write; the
    /// non-secure core is read-only. PL clocks reject frequencies above
    /// 250 MHz. Controller time advances to `at`.
    pub fn write_clock_register(
        &mut self,
        master: MasterId,
        clock: ClockId,
        freq: FrequencyHz,
        at: SimTime,
    ) -> Result<(), SocError> {
        if !master.may_write_clocks() {
            return Err(SocError::PermissionDenied {
                master,
                resource: "clock registers",
            });
        }
        if clock.is_programmable_logic() && freq.as_hz() > PL_CLOCK_MAX_HZ {
            return Err(SocError::FrequencyOutOfRange { clock, freq });
        }
        if at < self.now {
            return Err(SocError::TimeRegression { at, now: self.now });
        }
        let state = &mut self.clocks[clock.index()];
        if state.writes.last().is_some_and(|w| w.0 == at) {
            return Err(SocError::SameInstantConflict { clock, at });
        }
        state.writes.push((at, freq));
        self.now = at;
        Ok(())
    }

    /// Read a clock register at `at`. Any master may read; this asymmetry is
    /// the vulnerability the receiver processes exploit. A register write
    /// owns its instant, so a read at the write time returns the new value.
    pub fn read_clock_register(
        &self,
        _master: MasterId,
        clock: ClockId,
        at: SimTime,
    ) -> Result<FrequencyHz, SocError> {
        let writes = &self.clocks[clock.index()].writes;
        let idx = writes.partition_point(|w| w.0 <= at);
        if idx == 0 {
            return Err(SocError::NoSegment { clock, at });
        }
        Ok(writes[idx - 1].1)
    }

    /// Activate a gated PL clock for exactly `cycles` cycles at its current
    /// register frequency, then return it to off. Controller time advances
    /// to `at`.
    pub fn gate_clock_burst(
        &mut self,
        master: MasterId,
        clock: ClockId,
        cycles: u64,
        at: SimTime,
    ) -> Result<(), SocError> {
        if !clock.is_programmable_logic() {
            return Err(SocError::NotGateable { clock });
        }
        if !master.may_write_clocks() {
            return Err(SocError::PermissionDenied {
                master,
                resource: "clock gates",
            });
        }
        if at < self.now {
            return Err(SocError::TimeRegression { at, now: self.now });
        }
        if cycles == 0 {
            return Err(SocError::ZeroCycles);
        }
        let freq = self.read_clock_register(master, clock, at)?;
        let burst = GateBurst {
            start: at,
            freq,
            cycles,
        };
        let state = &mut self.clocks[clock.index()];
        if state.bursts.last().is_some_and(|b| b.end() > at) {
            return Err(SocError::Overlap { clock, at });
        }
        state.bursts.push(burst);
        self.now = at;
        Ok(())
    }

    /// Gate state at `t`. The CPU clock always runs; a PL clock runs only
    /// inside a burst window.
    pub fn gate_state(&self, clock: ClockId, t: SimTime) -> GateState {
        if !clock.is_programmable_logic() {
            return GateState::Running;
        }
        let bursts = &self.clocks[clock.index()].bursts;
        let idx = bursts.partition_point(|b| b.start <= t);
        if idx > 0 && bursts[idx - 1].end() > t {
            GateState::Running
        } else {
            GateState::Off
        }
    }

    /// Materialize the recorded register history of `clock` as a trace, with
    /// the still-open last segment closed at `horizon`.
    pub fn frequency_trace(&self, clock: ClockId, horizon: SimTime) -> FrequencyTrace {
        let writes = &self.clocks[clock.index()].writes;
        let mut trace = FrequencyTrace::new();
        for (i, &(start, freq)) in writes.iter().enumerate() {
            let end = writes.get(i + 1).map_or(horizon, |w| w.0);
            assert!(end > start, "horizon must lie past the last write");
            trace.push(start, freq, end.since(start));
        }
        trace
    }

    pub fn gate_trace(&self, clock: ClockId) -> GateTrace {
        let mut trace = GateTrace::new();
        for &b in &self.clocks[clock.index()].bursts {
            trace.push(b);
        }
        trace
    }

    /// Apply a time-ordered action list. Any per-action failure aborts the
    /// run and reports the offending index. Two actions on the same clock at
    /// the same instant are rejected. Identical schedules always produce
    /// identical controller states.
    pub fn run_schedule(&mut self, actions: &[Action]) -> Result<(), ScheduleError> {
        let mut last_per_clock: [Option<SimTime>; 5] = [None; 5];
        for (index, action) in actions.iter().enumerate() {
            let fail = |source| ScheduleError { index, source };
            let (clock, at) = (action.clock(), action.at());
            if last_per_clock[clock.index()] == Some(at) {
                return Err(fail(SocError::SameInstantConflict { clock, at }));
            }
            match *action {
                Action::SetFrequency {
                    master,
                    clock,
                    freq,
                    at,
                } => self
                    .write_clock_register(master, clock, freq, at)
                    .map_err(fail)?,
                Action::GateBurst {
                    master,
                    clock,
                    cycles,
                    at,
                } => self
                    .gate_clock_burst(master, clock, cycles, at)
                    .map_err(fail)?,
            }
            last_per_clock[clock.index()] = Some(at);
        }
        Ok(())
    }
}

/// One step of an intruder (or benign governor) schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    SetFrequency {
        master: MasterId,
        clock: ClockId,
        freq: FrequencyHz,
        at: SimTime,
    },
    GateBurst {
        master: MasterId,
        clock: ClockId,
        cycles: u64,
        at: SimTime,
    },
}

impl Action {
    pub fn at(&self) -> SimTime {
        match *self {
            Action::SetFrequency { at, .. } | Action::GateBurst { at, .. } => at,
        }
    }

    pub fn clock(&self) -> ClockId {
        match *self {
            Action::SetFrequency { clock, .. } | Action::GateBurst { clock, .. } => clock,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("schedule action {index}: {source}")]
pub struct ScheduleError {
    pub index: usize,
    pub source: SocError,
}

// ---------------------------------------------------------------------------
// Partitioned memory
// ---------------------------------------------------------------------------

/// A contiguous memory region with a fixed TrustZone security attribute and
/// fixed contents. Memory here is only a prop to demonstrate isolation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryRegion {
    pub base: u64,
    pub security: SecurityState,
    pub data: Vec<u8>,
}

impl MemoryRegion {
    pub fn end(&self) -> u64 {
        self.base + self.data.len() as u64
    }
}

/// TrustZone-partitioned external memory: disjoint regions, each secure or
/// non-secure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryMap {
    regions: Vec<MemoryRegion>,
}

impl MemoryMap {
    pub fn new(mut regions: Vec<MemoryRegion>) -> Result<Self, SocError> {
        regions.sort_by_key(|r| r.base);
        for pair in regions.windows(2) {
            if pair[1].base < pair[0].end() {
                return Err(SocError::RegionOverlap {
                    address: pair[1].base,
                });
            }
        }
        Ok(MemoryMap { regions })
    }

    /// Read one byte. A master may read a region only if its security state
    /// dominates the region's: secure masters read anything, non-secure
    /// masters read only non-secure regions.
    pub fn read(&self, master: MasterId, address: u64) -> Result<u8, SocError> {
        let idx = self.regions.partition_point(|r| r.base <= address);
        let region = idx
            .checked_sub(1)
            .map(|i| &self.regions[i])
            .filter(|r| address < r.end())
            .ok_or(SocError::UnmappedAddress { address })?;
        if master.security() == SecurityState::NonSecure && region.security == SecurityState::Secure
        {
            return Err(SocError::PermissionDenied {
                master,
                resource: "secure memory",
            });
        }
        Ok(region.data[(address - region.base) as usize])
    }
}

/// The whole prototype: clock controller plus partitioned memory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Soc {
    pub clocks: ClockController,
    pub memory: MemoryMap,
}

impl Soc {
    pub fn new(memory: MemoryMap) -> Self {
        Soc {
            clocks: ClockController::new(),
            memory,
        }
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
