//! End-to-end covert-channel attacks on the simulated SoC.
//!
//! Four paths, all driven by the same playbook: verify the receiver's direct
//! read of the secret is blocked, have the intruder read the secret through
//! its legitimate access, frame and modulate it onto the shared clock
//! hardware, observe through the path's channel, and decode on the receiver
//! side.
//!
//! * `a1`: secure core to an external electromagnetic observer (dwell
//!   keying on the CPU clock, noisy spectrogram channel);
//! * `a2`: secure core to the non-secure core (edge keying on the CPU
//!   clock, register sampling);
//! * `a3`: secure core to the non-secure PL IP (burst-count keying on a
//!   gated PL clock, with a second PL clock as the recorded reference);
//! * `a4`: secure PL IP to the non-secure core (edge keying, the PL master
//!   writing the CPU clock register directly).

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::channel::{em_observe, EmNoiseParams};
use crate::codec::{
    burst_decode, burst_encode, dwell_decode, dwell_encode, edge_decode_samples, edge_encode,
    frame_decode, frame_encode, reconstruct_trace, sample_trace, snap_samples, Bitstream,
    BurstParams, CodecError, DwellParams, EdgeParams,
};
use crate::harness::{bit_error_rate, bit_errors, measure_bandwidth, table1_peak_bandwidth};
use crate::soc::{
    Action, ClockId, FrequencyHz, FrequencyTrace, GateTrace, MasterId, MemoryMap, MemoryRegion,
    ScheduleError, SecurityState, SimTime, Soc, SocError, TRACE_CSV_HEADER,
};

/// Default secret planted in the secure region.
pub const DEFAULT_SECRET: &[u8; 16] = b"TRUSTZONE-SECRET";

const SECRET_BASE: u64 = 0x1000_0000;
const PUBLIC_BASE: u64 = 0x2000_0000;

// ---------------------------------------------------------------------------
// Scenario
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttackId {
    /// Attack #1: exfiltration to an external EM observer.
    EmExfil,
    /// Attack #2: secure core to non-secure core.
    CoreToCore,
    /// Attack #3: secure core to the non-secure PL IP.
    CoreToPlIp,
    /// Attack #4: secure PL IP to the non-secure core.
    PlIpToCore,
}

impl AttackId {
    pub const ALL: [AttackId; 4] = [
        AttackId::EmExfil,
        AttackId::CoreToCore,
        AttackId::CoreToPlIp,
        AttackId::PlIpToCore,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AttackId::EmExfil => "a1",
            AttackId::CoreToCore => "a2",
            AttackId::CoreToPlIp => "a3",
            AttackId::PlIpToCore => "a4",
        }
    }
}

impl fmt::Display for AttackId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AttackId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "a1" => Ok(AttackId::EmExfil),
            "a2" => Ok(AttackId::CoreToCore),
            "a3" => Ok(AttackId::CoreToPlIp),
            "a4" => Ok(AttackId::PlIpToCore),
            other => Err(format!("unknown attack '{other}' (expected a1..a4)")),
        }
    }
}

/// Receiving end of a scenario: a non-secure bus master, or the external
/// observer of attack #1 which holds no bus access at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Receiver {
    Master(MasterId),
    ExternalObserver,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CodecParams {
    Dwell(DwellParams),
    Edge(EdgeParams),
    Burst(BurstParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackScenario {
    pub id: AttackId,
    pub intruder: MasterId,
    pub receiver: Receiver,
    pub codec: CodecParams,
    pub secret: Vec<u8>,
    /// EM channel corruption; meaningful for `a1` only.
    pub noise: Option<EmNoiseParams>,
    /// Spectrogram frame period of the external observer (`a1` only).
    /// `None` derives a quarter of the shortest modulation dwell.
    pub em_sample_period_ns: Option<u64>,
    pub seed: u64,
}

/// Canonical scenario for each attack path: the long/short dwell
/// configuration at 325/433 MHz for `a1`, the same frequency pair under
/// edge keying for `a2`/`a4`, and the 10/5-cycle burst configuration at
/// 250 MHz for `a3`.
pub fn default_scenario(id: AttackId) -> AttackScenario {
    let edge = EdgeParams {
        low_freq: FrequencyHz::from_mhz(325),
        high_freq: FrequencyHz::from_mhz(433),
        // Roughly an 8.3 us half bit at 325 MHz, landing near the
        // 6e4 bps operating point.
        half_bit_iterations: 2708,
        cycles_per_iteration: 1,
        sampling_period_ns: None,
    };
    let (intruder, receiver, codec) = match id {
        AttackId::EmExfil => (
            MasterId::Core0,
            Receiver::ExternalObserver,
            CodecParams::Dwell(DwellParams {
                data_freq: FrequencyHz::from_mhz(325),
                separator_freq: FrequencyHz::from_mhz(433),
                one_dwell: 400,
                zero_dwell: 200,
                separator_dwell: 200,
                cycles_per_iteration: 1,
            }),
        ),
        AttackId::CoreToCore => (
            MasterId::Core0,
            Receiver::Master(MasterId::Core1),
            CodecParams::Edge(edge),
        ),
        AttackId::CoreToPlIp => (
            MasterId::Core0,
            Receiver::Master(MasterId::PlIpNonSecure),
            CodecParams::Burst(BurstParams {
                frequency: FrequencyHz::from_mhz(250),
                cycles_for_one: 10,
                cycles_for_zero: 5,
                gap_cycles: 2,
            }),
        ),
        AttackId::PlIpToCore => (
            MasterId::PlIpSecure,
            Receiver::Master(MasterId::Core1),
            CodecParams::Edge(edge),
        ),
    };
    AttackScenario {
        id,
        intruder,
        receiver,
        codec,
        secret: DEFAULT_SECRET.to_vec(),
        noise: None,
        em_sample_period_ns: None,
        seed: 0,
    }
}

impl AttackScenario {
    pub fn validate(&self) -> Result<(), AttackError> {
        let fail = |msg: String| Err(AttackError::ScenarioInvalid(msg));
        let path_ok = match self.id {
            AttackId::EmExfil => {
                self.intruder == MasterId::Core0
                    && self.receiver == Receiver::ExternalObserver
                    && matches!(self.codec, CodecParams::Dwell(_))
            }
            AttackId::CoreToCore => {
                self.intruder == MasterId::Core0
                    && self.receiver == Receiver::Master(MasterId::Core1)
                    && matches!(self.codec, CodecParams::Edge(_))
            }
            AttackId::CoreToPlIp => {
                self.intruder == MasterId::Core0
                    && self.receiver == Receiver::Master(MasterId::PlIpNonSecure)
                    && matches!(self.codec, CodecParams::Burst(_))
            }
            AttackId::PlIpToCore => {
                self.intruder == MasterId::PlIpSecure
                    && self.receiver == Receiver::Master(MasterId::Core1)
                    && matches!(self.codec, CodecParams::Edge(_))
            }
        };
        if !path_ok {
            return fail(format!(
                "attack {} requires its canonical intruder, receiver and codec",
                self.id
            ));
        }
        debug_assert_eq!(self.intruder.security(), SecurityState::Secure);
        match &self.codec {
            CodecParams::Dwell(p) => p.validate()?,
            CodecParams::Edge(p) => p.validate()?,
            CodecParams::Burst(p) => p.validate()?,
        }
        if self.id != AttackId::EmExfil {
            if self.noise.is_some() {
                return fail(format!("attack {} has no EM channel to corrupt", self.id));
            }
            if self.em_sample_period_ns.is_some() {
                return fail(format!("attack {} has no EM observer", self.id));
            }
        }
        if let Some(noise) = &self.noise {
            noise.validate().map_err(AttackError::ScenarioInvalid)?;
        }
        if self.em_sample_period_ns == Some(0) {
            return fail("the EM sample period must be positive".into());
        }
        if self.secret.is_empty() {
            return fail("the secret must be at least one byte".into());
        }
        Ok(())
    }

    /// Spectrogram frame period of the `a1` observer: a quarter of the
    /// shortest dwell, so run lengths survive reconstruction.
    fn em_sample_period(&self, p: &DwellParams) -> u64 {
        self.em_sample_period_ns
            .unwrap_or_else(|| (p.zero_ns().min(p.separator_ns()) / 4).max(1))
    }
}

/// Set one named parameter on a scenario, as `--set key=value` or a sweep
/// grid does. Keys are scoped to the scenario's codec.
pub fn apply_override(s: &mut AttackScenario, key: &str, value: &str) -> Result<(), String> {
    fn int(value: &str) -> Result<u64, String> {
        value
            .parse::<u64>()
            .map_err(|_| format!("'{value}' is not a non-negative integer"))
    }
    fn positive(value: &str) -> Result<u64, String> {
        let v = int(value)?;
        if v == 0 {
            return Err(format!("'{value}' must be positive"));
        }
        Ok(v)
    }
    fn float(value: &str) -> Result<f64, String> {
        value
            .parse::<f64>()
            .map_err(|_| format!("'{value}' is not a number"))
    }

    match (&mut s.codec, key) {
        (CodecParams::Dwell(p), "data_freq_hz") => {
            p.data_freq = FrequencyHz::from_hz(positive(value)?)
        }
        (CodecParams::Dwell(p), "separator_freq_hz") => {
            p.separator_freq = FrequencyHz::from_hz(positive(value)?)
        }
        (CodecParams::Dwell(p), "one_dwell") => p.one_dwell = positive(value)?,
        (CodecParams::Dwell(p), "zero_dwell") => p.zero_dwell = positive(value)?,
        (CodecParams::Dwell(p), "separator_dwell") => p.separator_dwell = positive(value)?,
        (CodecParams::Dwell(p), "cycles_per_iteration") => {
            p.cycles_per_iteration = positive(value)?
        }
        (CodecParams::Edge(p), "low_freq_hz") => {
            p.low_freq = FrequencyHz::from_hz(positive(value)?)
        }
        (CodecParams::Edge(p), "high_freq_hz") => {
            p.high_freq = FrequencyHz::from_hz(positive(value)?)
        }
        (CodecParams::Edge(p), "half_bit_iterations") => p.half_bit_iterations = positive(value)?,
        (CodecParams::Edge(p), "cycles_per_iteration") => p.cycles_per_iteration = positive(value)?,
        (CodecParams::Edge(p), "sampling_period_ns") => {
            p.sampling_period_ns = Some(positive(value)?)
        }
        (CodecParams::Burst(p), "frequency_hz") => {
            p.frequency = FrequencyHz::from_hz(positive(value)?)
        }
        (CodecParams::Burst(p), "cycles_for_one") => p.cycles_for_one = positive(value)?,
        (CodecParams::Burst(p), "cycles_for_zero") => p.cycles_for_zero = positive(value)?,
        (CodecParams::Burst(p), "gap_cycles") => p.gap_cycles = int(value)?,
        (_, "em_sample_period_ns") => s.em_sample_period_ns = Some(positive(value)?),
        (_, "freq_sigma") => noise_mut(s).freq_sigma = float(value)?,
        (_, "dropout_prob") => noise_mut(s).dropout_prob = float(value)?,
        (_, other) => return Err(format!("unknown parameter '{other}' for attack {}", s.id)),
    }
    Ok(())
}

fn noise_mut(s: &mut AttackScenario) -> &mut EmNoiseParams {
    let seed = s.seed;
    s.noise.get_or_insert_with(|| EmNoiseParams::clean(seed))
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

/// A clock trace captured during a run, named after its clock.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedTrace {
    pub clock: String,
    pub data: TraceData,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TraceData {
    Frequency(FrequencyTrace),
    Gate(GateTrace),
}

impl NamedTrace {
    pub fn file_name(&self) -> String {
        format!("{}.csv", self.clock)
    }

    /// Full CSV document, header included.
    pub fn to_csv(&self) -> String {
        let rows = match &self.data {
            TraceData::Frequency(t) => t.csv_rows(&self.clock),
            TraceData::Gate(t) => t.csv_rows(&self.clock),
        };
        format!("{TRACE_CSV_HEADER}\n{rows}")
    }
}

/// Everything a run produced: what was sent, what came back, and the channel
/// metrics. The bit error rate compares the framed bitstream with the bits
/// the receiver decoded off the channel, so framing failures count as bit
/// losses rather than vanishing.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackReport {
    pub scenario: AttackId,
    pub seed: u64,
    pub secret_sent: Vec<u8>,
    pub payload_recovered: Result<Vec<u8>, String>,
    pub bits_sent: u64,
    pub bit_errors: u64,
    pub bit_error_rate: f64,
    pub elapsed_ns: u64,
    pub bandwidth_bps: f64,
    /// Idealized frequency/cycles-for-0 rate; burst scenarios only.
    pub peak_bandwidth_bps: Option<f64>,
    pub direct_access_blocked: bool,
    pub traces: Vec<NamedTrace>,
}

impl AttackReport {
    pub fn recovered_ok(&self) -> bool {
        self.payload_recovered.as_deref() == Ok(&self.secret_sent)
    }

    pub fn to_document(&self) -> ReportDocument {
        ReportDocument {
            scenario: self.scenario.to_string(),
            seed: self.seed,
            secret_sent_hex: to_hex(&self.secret_sent),
            recovered_hex: self.payload_recovered.as_deref().map(to_hex).ok(),
            decode_error: self.payload_recovered.as_ref().err().cloned(),
            recovered_matches_secret: self.recovered_ok(),
            bits_sent: self.bits_sent,
            bit_errors: self.bit_errors,
            bit_error_rate: self.bit_error_rate,
            elapsed_ns: self.elapsed_ns,
            bandwidth_bps: self.bandwidth_bps,
            peak_bandwidth_bps: self.peak_bandwidth_bps,
            direct_access_blocked: self.direct_access_blocked,
            trace_files: self.traces.iter().map(NamedTrace::file_name).collect(),
        }
    }
}

fn to_hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Serializable face of an [`AttackReport`]; traces are referenced by their
/// exported CSV file names.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportDocument {
    pub scenario: String,
    pub seed: u64,
    pub secret_sent_hex: String,
    pub recovered_hex: Option<String>,
    pub decode_error: Option<String>,
    pub recovered_matches_secret: bool,
    pub bits_sent: u64,
    pub bit_errors: u64,
    pub bit_error_rate: f64,
    pub elapsed_ns: u64,
    pub bandwidth_bps: f64,
    pub peak_bandwidth_bps: Option<f64>,
    pub direct_access_blocked: bool,
    pub trace_files: Vec<String>,
}

impl ReportDocument {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AttackError {
    #[error("invalid scenario: {0}")]
    ScenarioInvalid(String),
    #[error(transparent)]
    Soc(#[from] SocError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

impl From<CodecError> for AttackError {
    fn from(e: CodecError) -> Self {
        AttackError::ScenarioInvalid(e.to_string())
    }
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

/// Register writes reproducing a frequency trace on `clock`.
pub fn frequency_schedule(trace: &FrequencyTrace, master: MasterId, clock: ClockId) -> Vec<Action> {
    trace
        .segments()
        .iter()
        .map(|seg| Action::SetFrequency {
            master,
            clock,
            freq: seg.freq,
            at: seg.start,
        })
        .collect()
}

/// Run one attack end to end and report what the receiver recovered.
pub fn run_attack(s: &AttackScenario) -> Result<AttackReport, AttackError> {
    s.validate()?;

    let memory = MemoryMap::new(vec![
        MemoryRegion {
            base: SECRET_BASE,
            security: SecurityState::Secure,
            data: s.secret.clone(),
        },
        MemoryRegion {
            base: PUBLIC_BASE,
            security: SecurityState::NonSecure,
            data: vec![0; 64],
        },
    ])?;
    let mut soc = Soc::new(memory);

    // The receiver first tries the direct path. For the external observer of
    // a1, which holds no bus access, every non-secure master stands in.
    let probes: &[MasterId] = match s.receiver {
        Receiver::Master(m) => &[m],
        Receiver::ExternalObserver => &[MasterId::Core1, MasterId::PlIpNonSecure],
    };
    let direct_access_blocked = probes.iter().all(|&m| {
        matches!(
            soc.memory.read(m, SECRET_BASE),
            Err(SocError::PermissionDenied { .. })
        )
    });

    // The intruder reads the secret through its legitimate secure access.
    let stolen: Vec<u8> = (0..s.secret.len() as u64)
        .map(|i| soc.memory.read(s.intruder, SECRET_BASE + i))
        .collect::<Result<_, _>>()?;
    let frame_bits = frame_encode(&stolen);

    // Modulate onto the clock hardware, observe, decode.
    let (decoded, elapsed_ns, traces) = match &s.codec {
        CodecParams::Dwell(p) => {
            let (cpu_trace, elapsed) = drive_cpu_clock(
                &mut soc,
                s.intruder,
                &edge_or_dwell_trace(&frame_bits, &s.codec),
            )?;
            let period = s.em_sample_period(p);
            let samples = sample_trace(&cpu_trace, period, 0, s.seed);
            let noise = s.noise.clone().unwrap_or(EmNoiseParams::clean(s.seed));
            let observed = em_observe(&samples, &noise);
            let decoded = snap_samples(&observed, p.data_freq, p.separator_freq)
                .map(|snapped| reconstruct_trace(&snapped, period))
                .and_then(|trace| dwell_decode(&trace, p));
            let traces = vec![NamedTrace {
                clock: ClockId::CpuClk.name().into(),
                data: TraceData::Frequency(cpu_trace),
            }];
            (decoded, elapsed, traces)
        }
        CodecParams::Edge(p) => {
            let (cpu_trace, elapsed) = drive_cpu_clock(
                &mut soc,
                s.intruder,
                &edge_or_dwell_trace(&frame_bits, &s.codec),
            )?;
            let samples = sample_trace(&cpu_trace, p.sampling_period(), 0, s.seed);
            let decoded = edge_decode_samples(&samples, p);
            let traces = vec![NamedTrace {
                clock: ClockId::CpuClk.name().into(),
                data: TraceData::Frequency(cpu_trace),
            }];
            (decoded, elapsed, traces)
        }
        CodecParams::Burst(p) => {
            let (data, reference, elapsed) =
                drive_gated_clocks(&mut soc, s.intruder, &frame_bits, p)?;
            let decoded = burst_decode(&data, p);
            let traces = vec![
                NamedTrace {
                    clock: ClockId::Fclk0.name().into(),
                    data: TraceData::Gate(data),
                },
                NamedTrace {
                    clock: ClockId::Fclk1.name().into(),
                    data: TraceData::Gate(reference),
                },
            ];
            (decoded, elapsed, traces)
        }
    };

    let decoded_bits = decoded.clone().unwrap_or_default();
    let payload_recovered = decoded
        .map_err(|e| e.to_string())
        .and_then(|bits| frame_decode(&bits).map_err(|e| e.to_string()));

    let bits_sent = frame_bits.len() as u64;
    let errors = bit_errors(&frame_bits, &decoded_bits);
    let peak_bandwidth_bps = match &s.codec {
        CodecParams::Burst(p) => Some(table1_peak_bandwidth(p.frequency, p.cycles_for_zero)),
        _ => None,
    };

    Ok(AttackReport {
        scenario: s.id,
        seed: s.seed,
        secret_sent: s.secret.clone(),
        payload_recovered,
        bits_sent,
        bit_errors: errors,
        bit_error_rate: bit_error_rate(&frame_bits, &decoded_bits),
        elapsed_ns,
        bandwidth_bps: measure_bandwidth(bits_sent, elapsed_ns).expect("transmission takes time"),
        peak_bandwidth_bps,
        direct_access_blocked,
        traces,
    })
}

fn edge_or_dwell_trace(bits: &Bitstream, codec: &CodecParams) -> FrequencyTrace {
    match codec {
        CodecParams::Dwell(p) => dwell_encode(bits, p, SimTime::ZERO),
        CodecParams::Edge(p) => edge_encode(bits, p, SimTime::ZERO),
        CodecParams::Burst(_) => unreachable!("burst scenarios drive gated clocks"),
    }
}

/// Execute a frequency trace as intruder writes to the CPU clock register
/// and read the recorded trace back off the controller.
fn drive_cpu_clock(
    soc: &mut Soc,
    intruder: MasterId,
    trace: &FrequencyTrace,
) -> Result<(FrequencyTrace, u64), AttackError> {
    let schedule = frequency_schedule(trace, intruder, ClockId::CpuClk);
    soc.clocks.run_schedule(&schedule)?;
    let horizon = trace.end_time().expect("framed payloads are never empty");
    let recorded = soc.clocks.frequency_trace(ClockId::CpuClk, horizon);
    let elapsed = recorded.total_duration_ns();
    Ok((recorded, elapsed))
}

/// Execute a burst transmission: set both PL clocks to the burst frequency,
/// key the data onto the first, and run the second continuously as the
/// receiver's reference. Returns recorded data and reference gate traces.
fn drive_gated_clocks(
    soc: &mut Soc,
    intruder: MasterId,
    bits: &Bitstream,
    p: &BurstParams,
) -> Result<(GateTrace, GateTrace, u64), AttackError> {
    // Registers are set at t=0; keying starts 1 ns later so no clock sees
    // two actions at one instant.
    let start = SimTime::from_ns(1);
    let gate = burst_encode(bits, p, start);
    let end = gate.end_time().expect("framed payloads are never empty");

    let mut schedule = vec![
        Action::SetFrequency {
            master: intruder,
            clock: ClockId::Fclk0,
            freq: p.frequency,
            at: SimTime::ZERO,
        },
        Action::SetFrequency {
            master: intruder,
            clock: ClockId::Fclk1,
            freq: p.frequency,
            at: SimTime::ZERO,
        },
    ];
    // One burst covering the whole transmission keeps the reference clock
    // running alongside the data clock.
    let span_ns = end.since(start) as u128;
    let reference_cycles = (span_ns * p.frequency.as_hz() as u128)
        .div_ceil(1_000_000_000)
        .max(1) as u64;
    schedule.push(Action::GateBurst {
        master: intruder,
        clock: ClockId::Fclk1,
        cycles: reference_cycles,
        at: start,
    });
    schedule.extend(gate.bursts().iter().map(|b| Action::GateBurst {
        master: intruder,
        clock: ClockId::Fclk0,
        cycles: b.cycles,
        at: b.start,
    }));

    soc.clocks.run_schedule(&schedule)?;
    let data = soc.clocks.gate_trace(ClockId::Fclk0);
    let reference = soc.clocks.gate_trace(ClockId::Fclk1);
    let elapsed = end.since(gate.start_time().unwrap());
    Ok((data, reference, elapsed))
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
