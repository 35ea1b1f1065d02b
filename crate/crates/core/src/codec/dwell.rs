//! Dwell-time keying.
//!
//! Every bit is sent at the same carrier frequency; the information is in how
//! long the carrier is held. A long dwell marks a 1, a short dwell marks a 0,
//! and a brief excursion to a second frequency separates consecutive bits so
//! the receiver can tell where one dwell ends and the next begins.

use super::{snap_frequency, tempo_to_duration, Bitstream, CodecError};
use crate::soc::{FrequencyHz, FrequencyTrace, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DwellParams {
    /// Carrier frequency every data dwell is held at.
    pub data_freq: FrequencyHz,
    /// Frequency of the separator excursion between bits.
    pub separator_freq: FrequencyHz,
    /// Loop iterations held for a logical 1. Must exceed `zero_dwell`.
    pub one_dwell: u64,
    /// Loop iterations held for a logical 0.
    pub zero_dwell: u64,
    /// Loop iterations held at the separator frequency.
    pub separator_dwell: u64,
    /// Clock cycles one loop iteration consumes.
    pub cycles_per_iteration: u64,
}

impl DwellParams {
    pub fn validate(&self) -> Result<(), CodecError> {
        let fail = |msg: &str| Err(CodecError::InvalidParams(msg.into()));
        if self.data_freq == self.separator_freq {
            return fail("data and separator frequencies must differ");
        }
        if self.zero_dwell == 0 || self.separator_dwell == 0 || self.cycles_per_iteration == 0 {
            return fail("dwell counts and cycles per iteration must be positive");
        }
        if self.one_dwell <= self.zero_dwell {
            return fail("the dwell for a 1 must exceed the dwell for a 0");
        }
        Ok(())
    }

    pub fn one_ns(&self) -> u64 {
        tempo_to_duration(self.one_dwell, self.data_freq, self.cycles_per_iteration)
    }

    pub fn zero_ns(&self) -> u64 {
        tempo_to_duration(self.zero_dwell, self.data_freq, self.cycles_per_iteration)
    }

    pub fn separator_ns(&self) -> u64 {
        tempo_to_duration(
            self.separator_dwell,
            self.separator_freq,
            self.cycles_per_iteration,
        )
    }

    /// Classify a measured data dwell. The threshold is the midpoint of the
    /// two expected dwells; a tie classifies as 1.
    fn classify(&self, duration_ns: u64) -> bool {
        2 * duration_ns >= self.one_ns() + self.zero_ns()
    }
}

/// Emit the dwell waveform for `bits` starting at `start`: one data dwell per
/// bit, each followed by a separator excursion.
pub fn dwell_encode(bits: &Bitstream, p: &DwellParams, start: SimTime) -> FrequencyTrace {
    let mut trace = FrequencyTrace::new();
    let mut cursor = start;
    for bit in bits.iter() {
        let dwell = if bit { p.one_ns() } else { p.zero_ns() };
        trace.push(cursor, p.data_freq, dwell);
        cursor = cursor.offset(dwell);
        trace.push(cursor, p.separator_freq, p.separator_ns());
        cursor = cursor.offset(p.separator_ns());
    }
    trace
}

/// Recover bits from a dwell waveform: classify every data-frequency segment
/// by its duration, using the separator segments only as delimiters.
pub fn dwell_decode(trace: &FrequencyTrace, p: &DwellParams) -> Result<Bitstream, CodecError> {
    let mut out = Bitstream::new();
    let mut prev_was_data = false;
    for seg in trace.segments() {
        let level = snap_frequency(seg.freq, p.data_freq, p.separator_freq).ok_or(
            CodecError::UnknownFrequency {
                freq: seg.freq,
                at: seg.start,
            },
        )?;
        if level == p.data_freq {
            if prev_was_data {
                return Err(CodecError::MalformedAlternation { at: seg.start });
            }
            out.push(p.classify(seg.duration_ns));
            prev_was_data = true;
        } else {
            prev_was_data = false;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Long/short dwell configuration at 325/433 MHz.
    fn params_a() -> DwellParams {
        DwellParams {
            data_freq: FrequencyHz::from_mhz(325),
            separator_freq: FrequencyHz::from_mhz(433),
            one_dwell: 400,
            zero_dwell: 200,
            separator_dwell: 200,
            cycles_per_iteration: 1,
        }
    }

    #[test]
    fn single_one_produces_dwell_then_separator() {
        let trace = dwell_encode(&"1".parse().unwrap(), &params_a(), SimTime::ZERO);
        let segs = trace.segments();
        assert_eq!(segs.len(), 2);
        assert_eq!(segs[0].freq, FrequencyHz::from_mhz(325));
        assert_eq!(segs[0].duration_ns, 1231);
        assert_eq!(segs[1].freq, FrequencyHz::from_mhz(433));
        assert_eq!(segs[1].duration_ns, 462);
    }

    #[test]
    fn empty_bits_empty_trace() {
        let trace = dwell_encode(&Bitstream::new(), &params_a(), SimTime::ZERO);
        assert!(trace.is_empty());
    }

    #[test]
    fn two_bits_unrolled_by_hand() {
        // "10": dwell 400, sep 200, dwell 200, sep 200 iterations, alternating
        // 325/433 MHz.
        let trace = dwell_encode(&"10".parse().unwrap(), &params_a(), SimTime::ZERO);
        let expect: Vec<(u64, u64, u64)> = vec![
            (0, 325_000_000, 1231),
            (1231, 433_000_000, 462),
            (1693, 325_000_000, 615),
            (2308, 433_000_000, 462),
        ];
        let got: Vec<(u64, u64, u64)> = trace
            .segments()
            .iter()
            .map(|s| (s.start.as_ns(), s.freq.as_hz(), s.duration_ns))
            .collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn round_trip_101() {
        let p = params_a();
        let bits: Bitstream = "101".parse().unwrap();
        let decoded = dwell_decode(&dwell_encode(&bits, &p, SimTime::ZERO), &p).unwrap();
        assert_eq!(decoded, bits);
    }

    #[test]
    fn midpoint_duration_ties_to_one() {
        let p = params_a();
        let midpoint = (p.one_ns() + p.zero_ns()) / 2; // 1846 / 2 = 923
        let mut trace = FrequencyTrace::new();
        trace.push(SimTime::ZERO, p.data_freq, midpoint);
        trace.push(
            SimTime::from_ns(midpoint),
            p.separator_freq,
            p.separator_ns(),
        );
        assert_eq!(dwell_decode(&trace, &p).unwrap().to_string(), "1");
    }

    #[test]
    fn off_band_segment_is_rejected() {
        let p = params_a();
        let mut trace = FrequencyTrace::new();
        trace.push(SimTime::ZERO, FrequencyHz::from_mhz(300), 1000);
        assert!(matches!(
            dwell_decode(&trace, &p),
            Err(CodecError::UnknownFrequency { .. })
        ));
    }

    #[test]
    fn adjacent_data_segments_are_malformed() {
        let p = params_a();
        let mut trace = FrequencyTrace::new();
        // Two data-band segments with slightly different raw frequencies so
        // they do not coalesce, as a noisy observation would produce.
        trace.push(SimTime::ZERO, FrequencyHz::from_hz(325_000_000), 1231);
        trace.push(
            SimTime::from_ns(1231),
            FrequencyHz::from_hz(325_000_100),
            615,
        );
        assert!(matches!(
            dwell_decode(&trace, &p),
            Err(CodecError::MalformedAlternation { .. })
        ));
    }

    #[test]
    fn total_duration_is_sum_of_per_bit_durations() {
        let p = params_a();
        let bits: Bitstream = "110100101".parse().unwrap();
        let trace = dwell_encode(&bits, &p, SimTime::ZERO);
        let expect: u64 = bits
            .iter()
            .map(|b| if b { p.one_ns() } else { p.zero_ns() } + p.separator_ns())
            .sum();
        assert_eq!(trace.total_duration_ns(), expect);
        assert_eq!(trace.end_time(), Some(SimTime::from_ns(expect)));
    }

    /// Frequency pairs far enough apart that 1% snapping is unambiguous.
    fn arb_params() -> impl Strategy<Value = DwellParams> {
        (
            10u64..400,
            1u64..1000,
            1u64..1000,
            1u64..500,
            1u64..4,
            any::<bool>(),
        )
            .prop_map(|(mhz, zero, delta, sep, cpi, data_is_lower)| {
                let a = FrequencyHz::from_mhz(mhz);
                let b = FrequencyHz::from_mhz(mhz * 2);
                let (data_freq, separator_freq) = if data_is_lower { (a, b) } else { (b, a) };
                DwellParams {
                    data_freq,
                    separator_freq,
                    one_dwell: zero + delta,
                    zero_dwell: zero,
                    separator_dwell: sep,
                    cycles_per_iteration: cpi,
                }
            })
    }

    proptest! {
        #[test]
        fn round_trip_any_bits(
            p in arb_params(),
            bytes in proptest::collection::vec(any::<u8>(), 0..16),
        ) {
            p.validate().unwrap();
            let bits = Bitstream::from_bytes(&bytes);
            let decoded = dwell_decode(&dwell_encode(&bits, &p, SimTime::ZERO), &p).unwrap();
            prop_assert_eq!(decoded, bits);
        }

        #[test]
        fn scaling_all_dwells_preserves_round_trip(
            p in arb_params(),
            k in 1u64..10,
            bytes in proptest::collection::vec(any::<u8>(), 0..8),
        ) {
            let scaled = DwellParams {
                one_dwell: p.one_dwell * k,
                zero_dwell: p.zero_dwell * k,
                separator_dwell: p.separator_dwell * k,
                ..p
            };
            let bits = Bitstream::from_bytes(&bytes);
            let decoded =
                dwell_decode(&dwell_encode(&bits, &scaled, SimTime::ZERO), &scaled).unwrap();
            prop_assert_eq!(decoded, bits);
        }
    }
}
