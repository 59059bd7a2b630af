//! Multi-block payloads.
//!
//! A payload of `l` bytes becomes the bit string `len(16 bits) ‖ payload`,
//! cut into `b`-bit blocks (zero-padded) and sent over consecutive epochs.

use crate::error::{Error, Result};

/// Largest payload the 16-bit length prefix can describe.
pub const MAX_PAYLOAD: usize = u16::MAX as usize;

/// Number of blocks needed for a payload of `len` bytes.
pub fn block_count(len: usize, bits: u32) -> usize {
    (16 + 8 * len).div_ceil(bits as usize)
}

pub fn frame(payload: &[u8], bits: u32) -> Result<Vec<u64>> {
    if payload.len() > MAX_PAYLOAD {
        return Err(Error::Malformed(format!("payload of {} bytes", payload.len())));
    }
    let mut stream = (payload.len() as u16).to_be_bytes().to_vec();
    stream.extend_from_slice(payload);
    let total = block_count(payload.len(), bits);
    let bit = |k: usize| -> u64 { stream.get(k / 8).map_or(0, |b| u64::from(b >> (7 - k % 8) & 1)) };
    Ok((0..total)
        .map(|blk| (0..bits as usize).fold(0u64, |acc, o| acc << 1 | bit(blk * bits as usize + o)))
        .collect())
}

/// Inverse of [`frame`]; trailing blocks beyond the encoded length are ignored.
pub fn unframe(blocks: &[u64], bits: u32) -> Result<Vec<u8>> {
    let mut bytes = Vec::with_capacity(blocks.len() * bits as usize / 8 + 1);
    let (mut acc, mut have) = (0u32, 0u32);
    for &blk in blocks {
        if blk >> bits != 0 {
            return Err(Error::MessageOutOfRange { value: blk, bits });
        }
        for o in (0..bits).rev() {
            acc = acc << 1 | ((blk >> o) & 1) as u32;
            have += 1;
            if have == 8 {
                bytes.push(acc as u8);
                acc = 0;
                have = 0;
            }
        }
    }
    if bytes.len() < 2 {
        return Err(Error::Malformed("missing length prefix".into()));
    }
    let len = u16::from_be_bytes([bytes[0], bytes[1]]) as usize;
    if bytes.len() < 2 + len {
        return Err(Error::Malformed(format!("truncated payload: want {len} bytes")));
    }
    Ok(bytes[2..2 + len].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_examples() {
        assert_eq!(frame(&[], 8).unwrap(), vec![0, 0]);
        assert_eq!(frame(b"A", 8).unwrap(), vec![0, 1, 0x41]);
        // 0x0001 0x41 in 6-bit blocks: 000000 000000 000101 000001 (padded)
        assert_eq!(frame(b"A", 6).unwrap(), vec![0, 0, 0b000101, 0b000001]);
        assert_eq!(block_count(1, 6), 4);
    }

    #[test]
    fn errors() {
        assert!(unframe(&[0], 8).is_err());
        assert!(unframe(&[0, 5, 1], 8).is_err());
        assert!(unframe(&[256], 8).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(payload in proptest::collection::vec(any::<u8>(), 0..200), bits in 1u32..=24) {
            let blocks = frame(&payload, bits).unwrap();
            prop_assert_eq!(blocks.len(), block_count(payload.len(), bits));
            prop_assert!(blocks.iter().all(|b| b >> bits == 0));
            let mut padded = blocks.clone();
            padded.extend([0, 0, 0]);
            prop_assert_eq!(unframe(&padded, bits).unwrap(), payload);
        }
    }
}
