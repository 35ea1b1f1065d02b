//! Burst-count keying over a gateable PL clock.
//!
//! The gated clock is activated for a bit-dependent number of cycles, with
//! the gate held off between bits. The receiving IP counts rising edges with
//! a counter that resets whenever the clock stops, so each activation window
//! delivers its cycle count verbatim.

use super::{Bitstream, CodecError};
use crate::soc::{cycles_to_ns, FrequencyHz, GateBurst, GateTrace, SimTime, PL_CLOCK_MAX_HZ};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BurstParams {
    /// Gated clock frequency; capped at 250 MHz like every PL clock.
    pub frequency: FrequencyHz,
    pub cycles_for_one: u64,
    pub cycles_for_zero: u64,
    /// Off cycles between consecutive bits. Zero packs bursts back to back;
    /// the idealized counter still separates them, but real hardware needs
    /// at least one off cycle to reset, so zero is for peak-rate experiments
    /// only.
    pub gap_cycles: u64,
}

impl BurstParams {
    pub fn validate(&self) -> Result<(), CodecError> {
        let fail = |msg: &str| Err(CodecError::InvalidParams(msg.into()));
        if self.frequency.as_hz() > PL_CLOCK_MAX_HZ {
            return fail("burst frequency exceeds the 250 MHz PL cap");
        }
        if self.cycles_for_one == 0 || self.cycles_for_zero == 0 {
            return fail("cycle counts must be positive");
        }
        if self.cycles_for_one == self.cycles_for_zero {
            return fail("the two cycle counts must differ");
        }
        Ok(())
    }

    pub fn gap_ns(&self) -> u64 {
        cycles_to_ns(self.gap_cycles, self.frequency)
    }
}

/// Emit one activation burst per bit, `gap_cycles` of off time between bits.
pub fn burst_encode(bits: &Bitstream, p: &BurstParams, start: SimTime) -> GateTrace {
    let mut trace = GateTrace::new();
    let mut cursor = start;
    for (i, bit) in bits.iter().enumerate() {
        if i > 0 {
            cursor = cursor.offset(p.gap_ns());
        }
        let cycles = if bit {
            p.cycles_for_one
        } else {
            p.cycles_for_zero
        };
        let burst = GateBurst {
            start: cursor,
            freq: p.frequency,
            cycles,
        };
        cursor = burst.end();
        trace.push(burst);
    }
    trace
}

/// Recover bits by counting cycles per burst.
pub fn burst_decode(trace: &GateTrace, p: &BurstParams) -> Result<Bitstream, CodecError> {
    trace
        .bursts()
        .iter()
        .map(|b| {
            if b.cycles == p.cycles_for_one {
                Ok(true)
            } else if b.cycles == p.cycles_for_zero {
                Ok(false)
            } else {
                Err(CodecError::UnknownCount { cycles: b.cycles })
            }
        })
        .collect::<Result<_, _>>()
        .map(|bits: Vec<bool>| bits.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params_10_5() -> BurstParams {
        BurstParams {
            frequency: FrequencyHz::from_mhz(250),
            cycles_for_one: 10,
            cycles_for_zero: 5,
            gap_cycles: 2,
        }
    }

    #[test]
    fn one_is_ten_cycles_40ns_at_250mhz() {
        let trace = burst_encode(&"1".parse().unwrap(), &params_10_5(), SimTime::ZERO);
        assert_eq!(trace.bursts().len(), 1);
        assert_eq!(trace.bursts()[0].cycles, 10);
        assert_eq!(trace.bursts()[0].duration_ns(), 40);
    }

    #[test]
    fn zero_is_five_cycles_50ns_at_100mhz() {
        let p = BurstParams {
            frequency: FrequencyHz::from_mhz(100),
            ..params_10_5()
        };
        let trace = burst_encode(&"0".parse().unwrap(), &p, SimTime::ZERO);
        assert_eq!(trace.bursts()[0].cycles, 5);
        assert_eq!(trace.bursts()[0].duration_ns(), 50);
    }

    #[test]
    fn empty_bits_empty_trace() {
        assert!(burst_encode(&Bitstream::new(), &params_10_5(), SimTime::ZERO).is_empty());
    }

    #[test]
    fn gaps_sit_between_bits_only() {
        let p = params_10_5(); // gap of 2 cycles = 8 ns at 250 MHz
        let trace = burst_encode(&"10".parse().unwrap(), &p, SimTime::ZERO);
        let b = trace.bursts();
        assert_eq!(b[0].start, SimTime::ZERO);
        assert_eq!(b[1].start, SimTime::from_ns(40 + 8));
        assert_eq!(trace.end_time(), Some(SimTime::from_ns(48 + 20)));
    }

    #[test]
    fn round_trip_1100() {
        let p = params_10_5();
        let bits: Bitstream = "1100".parse().unwrap();
        let decoded = burst_decode(&burst_encode(&bits, &p, SimTime::ZERO), &p).unwrap();
        assert_eq!(decoded, bits);
    }

    #[test]
    fn unknown_cycle_count_is_rejected() {
        let mut trace = GateTrace::new();
        trace.push(GateBurst {
            start: SimTime::ZERO,
            freq: FrequencyHz::from_mhz(250),
            cycles: 7,
        });
        assert_eq!(
            burst_decode(&trace, &params_10_5()),
            Err(CodecError::UnknownCount { cycles: 7 })
        );
    }

    #[test]
    fn empty_trace_decodes_to_nothing() {
        assert!(burst_decode(&GateTrace::new(), &params_10_5())
            .unwrap()
            .is_empty());
    }

    fn arb_params() -> impl Strategy<Value = BurstParams> {
        (1u64..=250, 1u64..100, 1u64..99, 0u64..10).prop_map(|(mhz, zero, delta, gap)| {
            BurstParams {
                frequency: FrequencyHz::from_mhz(mhz),
                cycles_for_one: zero + delta,
                cycles_for_zero: zero,
                gap_cycles: gap,
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
            let decoded = burst_decode(&burst_encode(&bits, &p, SimTime::ZERO), &p).unwrap();
            prop_assert_eq!(decoded, bits);
        }
    }
}
