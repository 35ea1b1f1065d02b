//! Deterministic desk-scale simulator for DVFS frequency-modulation covert
//! channels on a TrustZone-enabled heterogeneous SoC.
//!
//! A secure intruder process holds write permission over the shared clock
//! controller; a non-secure receiver holds read permission and nothing else.
//! TrustZone blocks the direct path to the secret, so the intruder keys the
//! secret onto the clocks instead. The crate models the SoC ([`soc`]), the
//! three modulation codecs and the framing protocol ([`codec`]), the
//! observation channels ([`channel`]), the four end-to-end attack paths
//! ([`attacks`]) and the measurement harness ([`harness`]).

pub mod attacks;
pub mod channel;
pub mod codec;
pub mod harness;
pub mod soc;
