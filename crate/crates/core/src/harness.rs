//! Quantitative evaluation: bit error rates, bandwidth, the peak-rate table
//! for the burst channel, and deterministic parameter sweeps.

use rayon::prelude::*;
use thiserror::Error;

use crate::attacks::{
    apply_override, default_scenario, run_attack, AttackError, AttackId, AttackReport,
};
use crate::codec::Bitstream;
use crate::soc::FrequencyHz;

/// Hamming distance over the longer of the two streams: positions missing
/// from the shorter stream count as errors.
pub fn bit_errors(sent: &Bitstream, received: &Bitstream) -> u64 {
    let matched = sent
        .iter()
        .zip(received.iter())
        .filter(|(a, b)| a != b)
        .count();
    let missing = sent.len().abs_diff(received.len());
    (matched + missing) as u64
}

/// Fraction of errored bit positions, in `[0, 1]`. Comparing two empty
/// streams is zero errors.
pub fn bit_error_rate(sent: &Bitstream, received: &Bitstream) -> f64 {
    let span = sent.len().max(received.len());
    if span == 0 {
        return 0.0;
    }
    bit_errors(sent, received) as f64 / span as f64
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HarnessError {
    #[error("cannot measure bandwidth over a zero-length interval")]
    ZeroDuration,
}

/// Bits per second over an elapsed simulation interval.
pub fn measure_bandwidth(bits_sent: u64, elapsed_ns: u64) -> Result<f64, HarnessError> {
    if elapsed_ns == 0 {
        return Err(HarnessError::ZeroDuration);
    }
    Ok(bits_sent as f64 * 1e9 / elapsed_ns as f64)
}

/// Idealized burst-channel rate: the gated clock frequency divided by the
/// cycles spent on a 0. This is a peak figure, ignoring gaps and the longer
/// 1 symbol; it is the convention behind the benchmark bandwidth
/// table, as distinct from measured end-to-end bandwidth.
pub fn table1_peak_bandwidth(frequency: FrequencyHz, cycles_for_zero: u64) -> f64 {
    assert!(cycles_for_zero > 0, "cycle count must be positive");
    frequency.as_hz() as f64 / cycles_for_zero as f64
}

/// The four burst-channel benchmark rows:
/// (frequency MHz, cycles for 1, cycles for 0, expected peak Mbps).
pub const TABLE1_ROWS: [(u64, u64, u64, u64); 4] = [
    (250, 10, 5, 50),
    (250, 3, 2, 125),
    (100, 10, 5, 20),
    (100, 3, 2, 50),
];

// ---------------------------------------------------------------------------
// Per-run stats and sweeps
// ---------------------------------------------------------------------------

/// Channel metrics of a single run.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStats {
    pub bits_sent: u64,
    pub bit_errors: u64,
    pub elapsed_ns: u64,
    pub bandwidth_bps: f64,
    pub ber: f64,
}

impl ChannelStats {
    pub fn from_report(report: &AttackReport) -> Self {
        ChannelStats {
            bits_sent: report.bits_sent,
            bit_errors: report.bit_errors,
            elapsed_ns: report.elapsed_ns,
            bandwidth_bps: report.bandwidth_bps,
            ber: report.bit_error_rate,
        }
    }
}

/// A parameter sweep: a grid of named parameter values laid over one attack
/// scenario, run `repetitions` times per point with derived seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub scenario: AttackId,
    pub repetitions: u32,
    pub base_seed: u64,
    /// Overrides applied to every run before the grid assignment, as
    /// `--set` supplies them.
    pub fixed: Vec<(String, String)>,
    /// Swept parameters in declaration order; the first varies slowest.
    pub grid: Vec<(String, Vec<String>)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct SweepSpecError {
    pub line: usize,
    pub message: String,
}

impl SweepSpec {
    /// Parse the flat key-value sweep format:
    ///
    /// ```text
    /// scenario = a2
    /// repetitions = 3
    /// seed = 42
    /// grid.half_bit_iterations = 100,200,400
    /// ```
    ///
    /// Lines starting with `#` and blank lines are ignored.
    pub fn parse(text: &str) -> Result<Self, SweepSpecError> {
        let fail = |line: usize, message: String| SweepSpecError { line, message };
        let mut scenario = None;
        let mut repetitions = 1u32;
        let mut base_seed = 0u64;
        let mut grid: Vec<(String, Vec<String>)> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| fail(line, format!("expected 'key = value', got '{trimmed}'")))?;
            match key {
                "scenario" => {
                    scenario = Some(value.parse::<AttackId>().map_err(|e| fail(line, e))?);
                }
                "repetitions" => {
                    repetitions =
                        value
                            .parse::<u32>()
                            .ok()
                            .filter(|&r| r >= 1)
                            .ok_or_else(|| {
                                fail(
                                    line,
                                    format!("'{value}' is not a positive repetition count"),
                                )
                            })?;
                }
                "seed" => {
                    base_seed = value
                        .parse::<u64>()
                        .map_err(|_| fail(line, format!("'{value}' is not a valid seed")))?;
                }
                _ => match key.strip_prefix("grid.") {
                    Some(param) if !param.is_empty() => {
                        let values: Vec<String> = value
                            .split(',')
                            .map(|v| v.trim().to_string())
                            .filter(|v| !v.is_empty())
                            .collect();
                        if values.is_empty() {
                            return Err(fail(line, format!("grid.{param} lists no values")));
                        }
                        grid.push((param.to_string(), values));
                    }
                    _ => return Err(fail(line, format!("unknown key '{key}'"))),
                },
            }
        }

        let scenario = scenario
            .ok_or_else(|| fail(text.lines().count().max(1), "missing 'scenario ='".into()))?;
        if grid.is_empty() {
            return Err(fail(
                text.lines().count().max(1),
                "the grid is empty; add at least one 'grid.<param> =' line".into(),
            ));
        }
        Ok(SweepSpec {
            scenario,
            repetitions,
            base_seed,
            fixed: Vec::new(),
            grid,
        })
    }

    /// Cartesian product of the grid in declaration order, last parameter
    /// fastest.
    pub fn points(&self) -> Vec<Vec<(String, String)>> {
        let mut points: Vec<Vec<(String, String)>> = vec![Vec::new()];
        for (param, values) in &self.grid {
            points = points
                .into_iter()
                .flat_map(|point| {
                    values.iter().map(move |v| {
                        let mut next = point.clone();
                        next.push((param.clone(), v.clone()));
                        next
                    })
                })
                .collect();
        }
        points
    }
}

/// One grid point with per-repetition stats and their means.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub assignments: Vec<(String, String)>,
    pub per_run: Vec<ChannelStats>,
    pub bits_sent: u64,
    pub mean_bit_errors: f64,
    pub mean_ber: f64,
    pub mean_bandwidth_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("grid point {point}: {message}")]
    BadParameter { point: usize, message: String },
    #[error(transparent)]
    Attack(#[from] AttackError),
}

/// Run every grid point, `repetitions` runs each with seeds derived from the
/// base seed. Points execute in parallel; row order is grid order.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, SweepError> {
    let points = spec.points();
    points
        .par_iter()
        .enumerate()
        .map(|(point_idx, assignments)| {
            let mut per_run = Vec::with_capacity(spec.repetitions as usize);
            for rep in 0..spec.repetitions {
                let mut scenario = default_scenario(spec.scenario);
                scenario.seed = spec
                    .base_seed
                    .wrapping_add(point_idx as u64 * 1_000_003)
                    .wrapping_add(rep as u64);
                for (key, value) in spec.fixed.iter().chain(assignments) {
                    apply_override(&mut scenario, key, value).map_err(|message| {
                        SweepError::BadParameter {
                            point: point_idx,
                            message,
                        }
                    })?;
                }
                if let Some(noise) = scenario.noise.as_mut() {
                    noise.seed = scenario.seed;
                }
                let report = run_attack(&scenario)?;
                per_run.push(ChannelStats::from_report(&report));
            }
            let n = per_run.len() as f64;
            Ok(SweepRow {
                assignments: assignments.clone(),
                bits_sent: per_run[0].bits_sent,
                mean_bit_errors: per_run.iter().map(|s| s.bit_errors as f64).sum::<f64>() / n,
                mean_ber: per_run.iter().map(|s| s.ber).sum::<f64>() / n,
                mean_bandwidth_bps: per_run.iter().map(|s| s.bandwidth_bps).sum::<f64>() / n,
                per_run,
            })
        })
        .collect()
}

/// Plot-ready CSV: one row per grid point, parameter columns first.
pub fn sweep_csv(spec: &SweepSpec, rows: &[SweepRow]) -> String {
    let mut out = String::new();
    for (param, _) in &spec.grid {
        out.push_str(param);
        out.push(',');
    }
    out.push_str("bits_sent,bit_errors,ber,bandwidth_bps\n");
    for row in rows {
        for (_, value) in &row.assignments {
            out.push_str(value);
            out.push(',');
        }
        out.push_str(&format!(
            "{},{:.4},{:.6},{:.3}\n",
            row.bits_sent, row.mean_bit_errors, row.mean_ber, row.mean_bandwidth_bps
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
