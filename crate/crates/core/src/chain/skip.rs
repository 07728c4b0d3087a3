//! Inter-block skip list entries.
//!
//! The entry of distance `k` stored in block `i` summarizes the `k` blocks
//! `i-k ..= i-1`. It exists only when all of those are data blocks
//! (`i - k >= 1`). Its hash is `H(pre_skipped_hash | digest)`, where
//! `pre_skipped_hash` hashes the `k` block hashes newest first, and the
//! block's skip-list root hashes the entry hashes in increasing `k`.

use crate::acc::{AccValue, Accumulator, Multiset};
use crate::codec::{DecodeError, Reader, Writer};
use crate::hash::{hash_parts, Digest};

/// One skip entry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SkipEntry {
    pub k: u64,
    pub pre_skipped_hash: Digest,
    /// Multiset sum of the skipped blocks' root multisets.
    pub w: Multiset,
    pub digest: AccValue,
    pub hash: Digest,
}

/// Skip distances `2, 4, ..., 2^len`.
pub fn distances(len: u8) -> impl Iterator<Item = u64> {
    (1..=len as u32).map(|j| 1u64 << j)
}

/// Distances present in the skip list of the block at `height`.
pub fn distances_at(height: u64, len: u8) -> Vec<u64> {
    distances(len).filter(|k| height > *k).collect()
}

/// Hash of the skipped block hashes, given newest first.
pub fn pre_skipped_hash<'a>(newest_first: impl IntoIterator<Item = &'a Digest>) -> Digest {
    let parts: Vec<&[u8]> = newest_first.into_iter().map(|d| d.as_slice()).collect();
    hash_parts(&parts)
}

pub fn entry_hash(pre_skipped_hash: &Digest, digest: &AccValue) -> Digest {
    hash_parts(&[pre_skipped_hash, &digest.to_bytes()])
}

/// Root over entry hashes in increasing distance; the empty list hashes the
/// empty string.
pub fn skip_list_root<'a>(entry_hashes: impl IntoIterator<Item = &'a Digest>) -> Digest {
    let parts: Vec<&[u8]> = entry_hashes.into_iter().map(|d| d.as_slice()).collect();
    hash_parts(&parts)
}

impl SkipEntry {
    /// Builds an entry from the skipped blocks' hashes (newest first) and
    /// their root multisets and digests.
    pub fn build(
        k: u64,
        hashes_newest_first: &[Digest],
        roots: &[(&Multiset, &AccValue)],
        acc: &Accumulator,
    ) -> Result<Self, crate::acc::AccError> {
        debug_assert_eq!(hashes_newest_first.len() as u64, k);
        let pre = pre_skipped_hash(hashes_newest_first);
        let mut w = Multiset::new();
        for (m, _) in roots {
            w.add_assign(m);
        }
        let digest = if acc.construction().supports_aggregation() {
            let ds: Vec<AccValue> = roots.iter().map(|(_, d)| **d).collect();
            acc.sum(&ds)?
        } else {
            acc.setup(&w)?
        };
        Ok(SkipEntry { k, hash: entry_hash(&pre, &digest), pre_skipped_hash: pre, w, digest })
    }

    pub fn encode(&self, w: &mut Writer) {
        w.u64(self.k);
        w.raw(&self.pre_skipped_hash);
        self.digest.encode(w);
        w.raw(&self.hash);
        self.w.encode(w);
    }

    pub fn decode(acc: &Accumulator, r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let k = r.u64("skip distance")?;
        let pre_skipped_hash = r.array("pre-skipped hash")?;
        let digest = AccValue::decode(acc.construction(), r)?;
        let hash = r.array("skip hash")?;
        let w = Multiset::decode(r)?;
        Ok(SkipEntry { k, pre_skipped_hash, w, digest, hash })
    }
}
