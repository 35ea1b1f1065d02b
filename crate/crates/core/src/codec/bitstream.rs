//! Bit-level payload representation.

use std::fmt;
use std::str::FromStr;

use super::CodecError;

/// An ordered sequence of bits. Serializes as an ASCII string of '0'/'1'.
/// Multi-bit fields are always most-significant-bit first.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Bitstream {
    bits: Vec<bool>,
}

impl Bitstream {
    pub fn new() -> Self {
        Bitstream::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        Bitstream {
            bits: Vec::with_capacity(bits),
        }
    }

    /// Expand bytes MSB-first.
    pub fn from_bytes(bytes: &[u8]) -> Self {
        let mut out = Bitstream::with_capacity(bytes.len() * 8);
        for &b in bytes {
            out.push_byte(b);
        }
        out
    }

    /// Repack into bytes. `None` unless the length is a multiple of 8.
    pub fn to_bytes(&self) -> Option<Vec<u8>> {
        if !self.bits.len().is_multiple_of(8) {
            return None;
        }
        Some(
            self.bits
                .chunks(8)
                .map(|c| c.iter().fold(0u8, |acc, &b| (acc << 1) | b as u8))
                .collect(),
        )
    }

    pub fn push(&mut self, bit: bool) {
        self.bits.push(bit);
    }

    pub fn push_byte(&mut self, byte: u8) {
        for i in (0..8).rev() {
            self.bits.push(byte >> i & 1 == 1);
        }
    }

    pub fn push_u32(&mut self, word: u32) {
        for i in (0..32).rev() {
            self.bits.push(word >> i & 1 == 1);
        }
    }

    /// 32-bit word starting at bit `pos`, MSB first.
    pub fn read_u32(&self, pos: usize) -> Option<u32> {
        let window = self.bits.get(pos..pos + 32)?;
        Some(window.iter().fold(0u32, |acc, &b| (acc << 1) | b as u32))
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.bits.iter().copied()
    }
}

impl FromIterator<bool> for Bitstream {
    fn from_iter<T: IntoIterator<Item = bool>>(iter: T) -> Self {
        Bitstream {
            bits: iter.into_iter().collect(),
        }
    }
}

impl fmt::Display for Bitstream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Bitstream {
    type Err = CodecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(CodecError::InvalidBitChar(other)),
            })
            .collect()
    }
}
