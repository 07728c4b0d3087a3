//! Blocks: header, objects, intra-block index and skip list.

use crate::acc::{AccValue, Accumulator, Multiset};
use crate::codec::{DecodeError, Reader, Writer};
use crate::hash::Digest;

use super::header::{BlockHeader, HEADER_LEN};
use super::intra::IntraIndex;
use super::object::TemporalObject;
use super::skip::SkipEntry;

const MAGIC: &[u8; 4] = b"VQBK";
const VERSION: u8 = 1;

/// A mined block. Height 0 is the object-free genesis block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub height: u64,
    pub header: BlockHeader,
    pub objects: Vec<TemporalObject>,
    /// Absent only for genesis.
    pub index: Option<IntraIndex>,
    /// Entries in increasing distance.
    pub skips: Vec<SkipEntry>,
}

impl Block {
    pub fn genesis(difficulty: u8) -> Self {
        Block { height: 0, header: BlockHeader::genesis().mine(difficulty), objects: Vec::new(), index: None, skips: Vec::new() }
    }

    pub fn hash(&self) -> Digest {
        self.header.hash()
    }

    /// Root multiset and digest, for blocks whose root carries a digest.
    pub fn root_summary(&self) -> Option<(&Multiset, &AccValue)> {
        let root = self.index.as_ref()?.root();
        root.digest.as_ref().map(|d| (&root.w, d))
    }

    pub fn skip(&self, k: u64) -> Option<&SkipEntry> {
        self.skips.iter().find(|s| s.k == k)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.raw(MAGIC);
        w.u8(VERSION);
        w.u64(self.height);
        w.raw(&self.header.to_bytes());
        w.len_prefix(self.objects.len());
        for o in &self.objects {
            o.encode(&mut w);
        }
        self.encode_ads(&mut w);
        w.finish()
    }

    fn encode_ads(&self, w: &mut Writer) {
        match &self.index {
            Some(ix) => {
                w.u8(1);
                ix.encode(w);
            }
            None => w.u8(0),
        }
        w.len_prefix(self.skips.len());
        for s in &self.skips {
            s.encode(w);
        }
    }

    /// Size in bytes of the authenticated structures (index and skip list) in
    /// the block's storage encoding, excluding header and objects.
    pub fn ads_bytes(&self) -> usize {
        let mut w = Writer::new();
        self.encode_ads(&mut w);
        w.len()
    }

    pub fn decode(acc: &Accumulator, bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        r.expect_magic(MAGIC)?;
        let v = r.u8("version")?;
        if v != VERSION {
            return Err(DecodeError::Version(v));
        }
        let height = r.u64("height")?;
        let header = BlockHeader::from_bytes(&r.array::<HEADER_LEN>("header")?);
        let n = r.count(16, "object count")?;
        let mut objects = Vec::with_capacity(n);
        for _ in 0..n {
            objects.push(TemporalObject::decode(&mut r)?);
        }
        let index = match r.u8("index flag")? {
            0 => None,
            1 => Some(IntraIndex::decode(acc, &mut r)?),
            _ => return Err(DecodeError::Invalid("index flag")),
        };
        let ns = r.count(8, "skip count")?;
        let mut skips = Vec::with_capacity(ns);
        for _ in 0..ns {
            skips.push(SkipEntry::decode(acc, &mut r)?);
        }
        r.finish()?;
        Ok(Block { height, header, objects, index, skips })
    }
}
