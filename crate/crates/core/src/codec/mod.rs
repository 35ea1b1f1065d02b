//! Pure transforms between payload bits and clock traces.
//!
//! Three modulation schemes are implemented, one per attack family:
//!
//! * [`dwell`] keys bits in how long a carrier frequency is held
//!   (long dwell = 1, short dwell = 0, separator level between bits);
//! * [`edge`] keys bits in the direction of a mid-bit frequency switch
//!   (Manchester-style: rising = 1, falling = 0);
//! * [`burst`] keys bits in the number of cycles a gated PL clock is
//!   activated for.
//!
//! [`framing`] wraps payloads in the on-air protocol (start marker, byte
//! count, payload, end marker) and [`sampling`] models the receiver that
//! polls the clock register periodically. Everything here is a pure function
//! of its inputs; the seeded sampler included.

mod bitstream;
pub mod burst;
pub mod dwell;
pub mod edge;
pub mod framing;
pub mod sampling;

pub use bitstream::Bitstream;
pub use burst::{burst_decode, burst_encode, BurstParams};
pub use dwell::{dwell_decode, dwell_encode, DwellParams};
pub use edge::{edge_decode_samples, edge_encode, EdgeParams};
pub use framing::{frame_decode, frame_encode, FRAME_MARKER};
pub use sampling::{reconstruct_trace, sample_trace, snap_samples};

use thiserror::Error;

use crate::soc::{FrequencyHz, SimTime};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("no start marker in stream")]
    NoStartMarker,
    #[error("stream ends before the frame completes")]
    TruncatedFrame,
    #[error("frame trailer is not the expected marker")]
    BadEndMarker,
    #[error("frequency {freq} at {at} is outside both expected bands")]
    UnknownFrequency { freq: FrequencyHz, at: SimTime },
    #[error("adjacent data segments at {at}, separator missing")]
    MalformedAlternation { at: SimTime },
    #[error("burst of {cycles} cycles matches neither symbol")]
    UnknownCount { cycles: u64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("{0:?} is not a bit")]
    InvalidBitChar(char),
}

/// Wall time of a busy loop of `iterations` iterations running at `freq`,
/// each iteration consuming `cycles_per_iteration` clock cycles. Rounded half
/// up to whole nanoseconds.
pub fn tempo_to_duration(iterations: u64, freq: FrequencyHz, cycles_per_iteration: u64) -> u64 {
    let f = freq.as_hz() as u128;
    let cycles = iterations as u128 * cycles_per_iteration as u128;
    ((cycles * 1_000_000_000 + f / 2) / f) as u64
}

/// Snap an observed frequency to the nearer of the two modulation levels.
/// Accepts only observations within 1% relative distance of the level.
pub fn snap_frequency(
    observed: FrequencyHz,
    a: FrequencyHz,
    b: FrequencyHz,
) -> Option<FrequencyHz> {
    let dist = |r: FrequencyHz| (observed.as_hz() as i128 - r.as_hz() as i128).unsigned_abs();
    let (near, d) = if dist(a) <= dist(b) {
        (a, dist(a))
    } else {
        (b, dist(b))
    };
    (d * 100 <= near.as_hz() as u128).then_some(near)
}
