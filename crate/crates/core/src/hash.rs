//! SHA-256 helpers shared by every authenticated structure in the crate.

use sha2::{Digest as _, Sha256};

/// A 32-byte SHA-256 output.
pub type Digest = [u8; 32];

/// The all-zero digest, used as the merkle root of blocks without objects.
pub const ZERO_DIGEST: Digest = [0u8; 32];

/// Hashes the concatenation of `parts`.
pub fn hash_parts(parts: &[&[u8]]) -> Digest {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    h.finalize().into()
}

/// Hashes a single byte string.
pub fn hash_bytes(bytes: &[u8]) -> Digest {
    hash_parts(&[bytes])
}

/// Renders a digest as lowercase hex.
pub fn to_hex(d: &Digest) -> String {
    hex::encode(d)
}

/// Counts the leading zero bits of a digest.
pub fn leading_zero_bits(d: &Digest) -> u32 {
    let mut n = 0;
    for b in d {
        if *b == 0 {
            n += 8;
        } else {
            n += b.leading_zeros();
            break;
        }
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_hash_matches_known_vector() {
        assert_eq!(
            to_hex(&hash_bytes(b"")),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn parts_concatenate() {
        assert_eq!(hash_parts(&[b"ab", b"c"]), hash_bytes(b"abc"));
    }

    #[test]
    fn zero_bits() {
        let mut d = [0xffu8; 32];
        assert_eq!(leading_zero_bits(&d), 0);
        d[0] = 0;
        d[1] = 0x10;
        assert_eq!(leading_zero_bits(&d), 11);
        assert_eq!(leading_zero_bits(&ZERO_DIGEST), 256);
    }
}
