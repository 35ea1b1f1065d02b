//! The on-air transfer protocol.
//!
//! A transfer starts with the marker word `0xA0000000`, followed by the
//! payload size in bytes, the payload itself, and the same marker word again.
//! All fields are MSB-first.

use super::{Bitstream, CodecError};

/// Word sent before and after the payload.
pub const FRAME_MARKER: u32 = 0xA000_0000;

/// Wrap payload bytes in a frame: marker, 32-bit byte count, payload bits,
/// marker.
pub fn frame_encode(payload: &[u8]) -> Bitstream {
    let size = u32::try_from(payload.len()).expect("payload too large for the size field");
    let mut bits = Bitstream::with_capacity(96 + payload.len() * 8);
    bits.push_u32(FRAME_MARKER);
    bits.push_u32(size);
    for &b in payload {
        bits.push_byte(b);
    }
    bits.push_u32(FRAME_MARKER);
    bits
}

/// Parse the first frame in `stream`: locate the first marker, read the
/// size, extract the payload, and verify the trailing marker.
pub fn frame_decode(stream: &Bitstream) -> Result<Vec<u8>, CodecError> {
    let start = find_marker(stream).ok_or(CodecError::NoStartMarker)?;
    let size = stream
        .read_u32(start + 32)
        .ok_or(CodecError::TruncatedFrame)? as usize;
    let payload_pos = start + 64;
    let trailer_pos = payload_pos + size * 8;
    if trailer_pos + 32 > stream.len() {
        return Err(CodecError::TruncatedFrame);
    }
    if stream.read_u32(trailer_pos) != Some(FRAME_MARKER) {
        return Err(CodecError::BadEndMarker);
    }
    let payload: Bitstream = stream.bits()[payload_pos..trailer_pos]
        .iter()
        .copied()
        .collect();
    Ok(payload
        .to_bytes()
        .expect("payload is a whole number of bytes"))
}

/// Bit offset of the first marker occurrence, scanning a rolling 32-bit
/// window.
fn find_marker(stream: &Bitstream) -> Option<usize> {
    let mut window = 0u32;
    for (i, bit) in stream.iter().enumerate() {
        window = window << 1 | bit as u32;
        if i >= 31 && window == FRAME_MARKER {
            return Some(i - 31);
        }
    }
    None
}
