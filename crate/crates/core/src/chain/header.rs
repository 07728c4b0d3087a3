//! Block headers, proof-of-work and light-client header validation.

use serde::Serialize;
use thiserror::Error;

use crate::codec::{DecodeError, Reader, Writer};
use crate::hash::{hash_bytes, leading_zero_bits, Digest, ZERO_DIGEST};

/// Encoded header size in bytes.
pub const HEADER_LEN: usize = 112;

const HEADERS_MAGIC: &[u8; 4] = b"VQHD";
const HEADERS_VERSION: u8 = 1;

/// Fixed-layout block header: `prev | ts | nonce | merkle_root | skip_list_root`
/// with little-endian integers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BlockHeader {
    pub prev_hash: Digest,
    pub ts: u64,
    pub nonce: u64,
    pub merkle_root: Digest,
    pub skip_list_root: Digest,
}

impl BlockHeader {
    pub fn genesis() -> Self {
        BlockHeader {
            prev_hash: ZERO_DIGEST,
            ts: 0,
            nonce: 0,
            merkle_root: ZERO_DIGEST,
            skip_list_root: super::skip::skip_list_root([]),
        }
    }

    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[..32].copy_from_slice(&self.prev_hash);
        out[32..40].copy_from_slice(&self.ts.to_le_bytes());
        out[40..48].copy_from_slice(&self.nonce.to_le_bytes());
        out[48..80].copy_from_slice(&self.merkle_root);
        out[80..].copy_from_slice(&self.skip_list_root);
        out
    }

    pub fn from_bytes(b: &[u8; HEADER_LEN]) -> Self {
        let d = |r: std::ops::Range<usize>| -> Digest { b[r].try_into().unwrap() };
        BlockHeader {
            prev_hash: d(0..32),
            ts: u64::from_le_bytes(b[32..40].try_into().unwrap()),
            nonce: u64::from_le_bytes(b[40..48].try_into().unwrap()),
            merkle_root: d(48..80),
            skip_list_root: d(80..112),
        }
    }

    pub fn hash(&self) -> Digest {
        hash_bytes(&self.to_bytes())
    }

    pub fn meets_difficulty(&self, difficulty: u8) -> bool {
        leading_zero_bits(&self.hash()) >= difficulty as u32
    }

    /// Searches nonces upward from zero until the difficulty is met.
    pub fn mine(mut self, difficulty: u8) -> Self {
        self.nonce = 0;
        while !self.meets_difficulty(difficulty) {
            self.nonce += 1;
        }
        self
    }
}

/// Why header validation failed, with the index of the first bad header.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HeaderError {
    #[error("header {0} does not link to its predecessor")]
    Linkage(usize),
    #[error("header {0} has a timestamp earlier than its predecessor")]
    Timestamp(usize),
    #[error("header {0} does not meet the proof-of-work difficulty")]
    Difficulty(usize),
    #[error("header 0 is not a genesis header")]
    Genesis,
}

impl HeaderError {
    pub fn index(&self) -> usize {
        match self {
            HeaderError::Linkage(i) | HeaderError::Timestamp(i) | HeaderError::Difficulty(i) => *i,
            HeaderError::Genesis => 0,
        }
    }
}

/// Light-client sync check: genesis form, hash linkage, non-decreasing
/// timestamps and proof-of-work.
pub fn validate_headers(headers: &[BlockHeader], difficulty: u8) -> Result<(), HeaderError> {
    let Some(first) = headers.first() else { return Ok(()) };
    if first.prev_hash != ZERO_DIGEST || first.merkle_root != ZERO_DIGEST {
        return Err(HeaderError::Genesis);
    }
    for (i, h) in headers.iter().enumerate() {
        if !h.meets_difficulty(difficulty) {
            return Err(HeaderError::Difficulty(i));
        }
        if i > 0 {
            let prev = &headers[i - 1];
            if h.prev_hash != prev.hash() {
                return Err(HeaderError::Linkage(i));
            }
            if h.ts < prev.ts {
                return Err(HeaderError::Timestamp(i));
            }
        }
    }
    Ok(())
}

/// Serializes a header list (the light client's `headers.bin`).
pub fn encode_headers(headers: &[BlockHeader]) -> Vec<u8> {
    let mut w = Writer::new();
    w.raw(HEADERS_MAGIC);
    w.u8(HEADERS_VERSION);
    w.u64(headers.len() as u64);
    for h in headers {
        w.raw(&h.to_bytes());
    }
    w.finish()
}

pub fn decode_headers(bytes: &[u8]) -> Result<Vec<BlockHeader>, DecodeError> {
    let mut r = Reader::new(bytes);
    r.expect_magic(HEADERS_MAGIC)?;
    let v = r.u8("version")?;
    if v != HEADERS_VERSION {
        return Err(DecodeError::Version(v));
    }
    let n = r.u64("header count")? as usize;
    if n.saturating_mul(HEADER_LEN) != r.remaining() {
        return Err(DecodeError::Invalid("header count"));
    }
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(BlockHeader::from_bytes(&r.array("header")?));
    }
    r.finish()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: usize, difficulty: u8) -> Vec<BlockHeader> {
        let mut hs = vec![BlockHeader::genesis().mine(difficulty)];
        for i in 1..n {
            let h = BlockHeader {
                prev_hash: hs[i - 1].hash(),
                ts: i as u64 * 10,
                nonce: 0,
                merkle_root: [i as u8; 32],
                skip_list_root: [0; 32],
            };
            hs.push(h.mine(difficulty));
        }
        hs
    }

    #[test]
    fn layout_round_trip() {
        let h = chain(3, 0)[2];
        assert_eq!(BlockHeader::from_bytes(&h.to_bytes()), h);
        assert_eq!(&h.to_bytes()[32..40], &20u64.to_le_bytes());
    }

    #[test]
    fn honest_chain_validates() {
        assert!(validate_headers(&[], 0).is_ok());
        assert!(validate_headers(&chain(5, 0), 0).is_ok());
        let hs = chain(4, 6);
        assert!(validate_headers(&hs, 6).is_ok());
        assert!(hs.iter().all(|h| leading_zero_bits(&h.hash()) >= 6));
    }

    #[test]
    fn mutations_are_located() {
        let mut hs = chain(5, 0);
        hs[2].merkle_root[0] ^= 1;
        assert_eq!(validate_headers(&hs, 0), Err(HeaderError::Linkage(3)));
        let mut hs = chain(5, 0);
        hs[4].ts = 5;
        assert_eq!(validate_headers(&hs, 0), Err(HeaderError::Timestamp(4)));
    }

    #[test]
    fn header_file_round_trip() {
        let hs = chain(4, 0);
        assert_eq!(decode_headers(&encode_headers(&hs)).unwrap(), hs);
        let mut b = encode_headers(&hs);
        b.pop();
        assert!(decode_headers(&b).is_err());
    }
}
