//! Periodic observation of a clock trace.
//!
//! Models a receiver that polls the clock register (or a spectrogram bin)
//! every `period_ns`, with optional bounded timing jitter from a seeded
//! generator. Sampling is deterministic for a fixed seed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{snap_frequency, CodecError};
use crate::soc::{FrequencyHz, FrequencyTrace, SimTime};

/// Sample `trace` at `start + k*period + u_k` with `u_k` uniform in
/// `[-jitter, +jitter]`. Samples falling outside the trace are omitted.
/// Requires `period > 2*jitter` so sample times stay strictly increasing.
pub fn sample_trace(
    trace: &FrequencyTrace,
    period_ns: u64,
    jitter_ns: u64,
    seed: u64,
) -> Vec<(SimTime, FrequencyHz)> {
    assert!(period_ns > 0, "sampling period must be positive");
    assert!(
        period_ns > 2 * jitter_ns,
        "sampling period must exceed twice the jitter"
    );
    let (Some(start), Some(end)) = (trace.start_time(), trace.end_time()) else {
        return Vec::new();
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for k in 0u64.. {
        let nominal = start.as_ns() + k * period_ns;
        if nominal > end.as_ns() + jitter_ns {
            break;
        }
        let t = if jitter_ns == 0 {
            nominal
        } else {
            let u = rng.random_range(-(jitter_ns as i64)..=jitter_ns as i64);
            nominal.saturating_add_signed(u)
        };
        let at = SimTime::from_ns(t);
        if let Some(freq) = trace.sample_at(at) {
            out.push((at, freq));
        }
    }
    out
}

/// Snap every sample to the nearer of the two modulation levels, within the
/// 1% band. Used before run-length reconstruction so that frequency noise
/// does not split runs.
pub fn snap_samples(
    samples: &[(SimTime, FrequencyHz)],
    a: FrequencyHz,
    b: FrequencyHz,
) -> Result<Vec<(SimTime, FrequencyHz)>, CodecError> {
    samples
        .iter()
        .map(|&(t, freq)| {
            snap_frequency(freq, a, b)
                .map(|f| (t, f))
                .ok_or(CodecError::UnknownFrequency { freq, at: t })
        })
        .collect()
}

/// Rebuild a segment view from periodic samples by run-length grouping.
/// Each run of equal frequencies becomes one segment lasting until the next
/// run's first sample; the final run extends one period past its last
/// sample. Durations are therefore accurate to within one period.
pub fn reconstruct_trace(samples: &[(SimTime, FrequencyHz)], period_ns: u64) -> FrequencyTrace {
    let mut trace = FrequencyTrace::new();
    let mut i = 0;
    while i < samples.len() {
        let (start, freq) = samples[i];
        let mut j = i + 1;
        while j < samples.len() && samples[j].1 == freq {
            j += 1;
        }
        let end = match samples.get(j) {
            Some(&(next_start, _)) => next_start,
            None => samples[j - 1].0.offset(period_ns),
        };
        trace.push(start, freq, end.since(start));
        i = j;
    }
    trace
}
