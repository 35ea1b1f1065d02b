//! Edge keying (Manchester-style).
//!
//! Interpreting the lower frequency as logic low and the higher as logic
//! high, a 1 is sent as a rising mid-bit switch (low half-bit then high
//! half-bit) and a 0 as a falling one. Equal consecutive bits force an extra
//! switch at the bit boundary; the decoder suppresses those with a standard
//! bi-phase guard window.

use super::{snap_frequency, tempo_to_duration, Bitstream, CodecError};
use crate::soc::{FrequencyHz, FrequencyTrace, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeParams {
    /// Level interpreted as logic low. Must be below `high_freq`.
    pub low_freq: FrequencyHz,
    /// Level interpreted as logic high.
    pub high_freq: FrequencyHz,
    /// Busy-loop iterations per half bit.
    pub half_bit_iterations: u64,
    /// Clock cycles one loop iteration consumes.
    pub cycles_per_iteration: u64,
    /// Receiver sampling period. `None` derives half the half-bit time,
    /// which always resolves every level. Larger values undersample;
    /// they are accepted so degraded configurations can be studied, but
    /// recovery is only guaranteed up to half the half-bit time.
    pub sampling_period_ns: Option<u64>,
}

impl EdgeParams {
    pub fn validate(&self) -> Result<(), CodecError> {
        let fail = |msg: &str| Err(CodecError::InvalidParams(msg.into()));
        if self.low_freq >= self.high_freq {
            return fail("the low level must be a lower frequency than the high level");
        }
        if self.half_bit_iterations == 0 || self.cycles_per_iteration == 0 {
            return fail("iteration counts must be positive");
        }
        if self.sampling_period_ns == Some(0) {
            return fail("the sampling period must be positive");
        }
        Ok(())
    }

    /// Half-bit wall time. The sender's busy loop is timed at the slower of
    /// the two frequencies and both half-bits are held for this long, so one
    /// duration governs the whole waveform.
    pub fn half_bit_ns(&self) -> u64 {
        tempo_to_duration(
            self.half_bit_iterations,
            self.low_freq,
            self.cycles_per_iteration,
        )
    }

    pub fn bit_ns(&self) -> u64 {
        2 * self.half_bit_ns()
    }

    /// Effective receiver sampling period.
    pub fn sampling_period(&self) -> u64 {
        self.sampling_period_ns
            .unwrap_or_else(|| (self.half_bit_ns() / 2).max(1))
    }
}

/// Emit the edge waveform for `bits` starting at `start`. Matching half-bits
/// of adjacent bits coalesce into single segments.
pub fn edge_encode(bits: &Bitstream, p: &EdgeParams, start: SimTime) -> FrequencyTrace {
    let h = p.half_bit_ns();
    let mut trace = FrequencyTrace::new();
    let mut cursor = start;
    for bit in bits.iter() {
        let (first, second) = if bit {
            (p.low_freq, p.high_freq)
        } else {
            (p.high_freq, p.low_freq)
        };
        trace.push(cursor, first, h);
        cursor = cursor.offset(h);
        trace.push(cursor, second, h);
        cursor = cursor.offset(h);
    }
    trace
}

/// Recover bits from periodic register samples: emit 1 on a low-to-high
/// transition and 0 on a high-to-low one. After an accepted data edge,
/// transitions within 1.5 half-bit times are bit-boundary edges between
/// equal consecutive bits and are ignored. The first observed transition is
/// data by construction.
pub fn edge_decode_samples(
    samples: &[(SimTime, FrequencyHz)],
    p: &EdgeParams,
) -> Result<Bitstream, CodecError> {
    let h = p.half_bit_ns();
    let mut out = Bitstream::new();
    let mut prev_level: Option<FrequencyHz> = None;
    let mut last_accepted: Option<SimTime> = None;
    for &(t, freq) in samples {
        let level = snap_frequency(freq, p.low_freq, p.high_freq)
            .ok_or(CodecError::UnknownFrequency { freq, at: t })?;
        if let Some(prev) = prev_level {
            if prev != level {
                let accept = match last_accepted {
                    None => true,
                    // t - last >= 1.5h, kept in integers.
                    Some(last) => 2 * t.since(last) >= 3 * h,
                };
                if accept {
                    out.push(level == p.high_freq);
                    last_accepted = Some(t);
                }
            }
        }
        prev_level = Some(level);
    }
    Ok(out)
}
