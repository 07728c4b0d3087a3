//! Verification objects and their binary encoding.
//!
//! # Byte layout (version 1, little-endian)
//!
//! ```text
//! vo       := "VQVO" u8:version u8:construction u32:n_segments segment*
//!             u32:n_batches batch*
//! segment  := 0x01 u64:height node
//!           | 0x02 u64:owner u64:k [32]:pre_skipped_hash digest
//!             u32:n_siblings [32]* evidence
//! node     := 0x10 object digest                      revealed leaf
//!           | 0x11 u64:t [32]:body_hash digest         out-of-window leaf
//!           | 0x12 [32]:inner digest evidence          pruned subtree
//!           | 0x13 u8:has_digest [digest] node node    internal node
//! evidence := 0x00 clause proof | 0x01 u32:batch_index
//! batch    := clause digest proof
//! clause   := u32:n (u32:len bytes)*
//! object   := u64:t u32:n_v u64* u32:n_w (u32:len utf8)*
//! ```
//!
//! `digest` is a compressed G1 point (48 bytes) for `acc1` and a compressed
//! G1 plus G2 point (144 bytes) for `acc2`; `proof` is two compressed G2
//! points for `acc1` and one compressed G1 point for `acc2`.

use crate::acc::{AccValue, Construction, DisjointProof};
use crate::chain::TemporalObject;
use crate::codec::{DecodeError, Reader, Writer};
use crate::hash::Digest;
use crate::transform::Clause;

const MAGIC: &[u8; 4] = b"VQVO";
const VERSION: u8 = 1;
const MAX_DEPTH: usize = 96;

/// Why a subtree or skip span was omitted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Evidence {
    /// A disjointness proof against one query clause.
    Single { clause: Clause, proof: DisjointProof },
    /// Membership in an aggregated proof of the VO's batch list.
    Batch(u32),
}

/// A node of a per-block VO tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VoNode {
    /// A leaf whose object is disclosed.
    Object { object: TemporalObject, digest: AccValue },
    /// A leaf outside the time window: only its timestamp is disclosed.
    Hidden { t: u64, body_hash: Digest, digest: AccValue },
    /// A subtree proven not to match.
    Mismatch { inner: Digest, digest: AccValue, evidence: Evidence },
    /// An internal node the traversal descended into.
    Branch { digest: Option<AccValue>, left: Box<VoNode>, right: Box<VoNode> },
}

/// A skip-list entry proven not to match, standing for `k` whole blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SkipProof {
    /// Height of the block whose skip list holds the entry.
    pub owner: u64,
    pub k: u64,
    pub pre_skipped_hash: Digest,
    pub digest: AccValue,
    /// Hashes of the owner's other entries, in increasing distance.
    pub siblings: Vec<Digest>,
    pub evidence: Evidence,
}

impl SkipProof {
    /// Heights covered, inclusive.
    pub fn span(&self) -> (u64, u64) {
        (self.owner - self.k, self.owner - 1)
    }
}

/// One piece of the coverage of a query span.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Segment {
    Block { height: u64, root: VoNode },
    Skip(SkipProof),
}

impl Segment {
    /// Heights covered, inclusive.
    pub fn span(&self) -> (u64, u64) {
        match self {
            Segment::Block { height, .. } => (*height, *height),
            Segment::Skip(s) => s.span(),
        }
    }
}

/// An aggregated disjointness proof shared by several VO entries carrying
/// the same clause.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BatchProof {
    pub clause: Clause,
    /// Sum of the members' digests.
    pub digest: AccValue,
    pub proof: DisjointProof,
}

/// Everything a light client needs besides headers to check a result set.
/// Segments are ordered from the newest covered block to the oldest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerificationObject {
    pub construction: Construction,
    pub segments: Vec<Segment>,
    pub batches: Vec<BatchProof>,
}

impl VerificationObject {
    pub fn empty(construction: Construction) -> Self {
        VerificationObject { construction, segments: Vec::new(), batches: Vec::new() }
    }

    /// Visits every evidence slot in traversal order.
    pub fn for_each_evidence_mut(&mut self, mut f: impl FnMut(&mut Evidence, &AccValue)) {
        for seg in &mut self.segments {
            match seg {
                Segment::Block { root, .. } => walk_mut(root, &mut f),
                Segment::Skip(s) => f(&mut s.evidence, &s.digest),
            }
        }
    }

    /// Visits every evidence slot in traversal order.
    pub fn for_each_evidence(&self, mut f: impl FnMut(&Evidence, &AccValue)) {
        for seg in &self.segments {
            match seg {
                Segment::Block { root, .. } => walk(root, &mut f),
                Segment::Skip(s) => f(&s.evidence, &s.digest),
            }
        }
    }

    /// Number of disjointness proofs a verifier must check.
    pub fn proof_count(&self) -> usize {
        let mut n = self.batches.len();
        self.for_each_evidence(|e, _| {
            if matches!(e, Evidence::Single { .. }) {
                n += 1;
            }
        });
        n
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.raw(MAGIC);
        w.u8(VERSION);
        w.u8(self.construction.tag());
        w.len_prefix(self.segments.len());
        for s in &self.segments {
            match s {
                Segment::Block { height, root } => {
                    w.u8(0x01);
                    w.u64(*height);
                    encode_node(root, &mut w);
                }
                Segment::Skip(p) => {
                    w.u8(0x02);
                    w.u64(p.owner);
                    w.u64(p.k);
                    w.raw(&p.pre_skipped_hash);
                    p.digest.encode(&mut w);
                    w.len_prefix(p.siblings.len());
                    for h in &p.siblings {
                        w.raw(h);
                    }
                    encode_evidence(&p.evidence, &mut w);
                }
            }
        }
        w.len_prefix(self.batches.len());
        for b in &self.batches {
            b.clause.encode(&mut w);
            b.digest.encode(&mut w);
            b.proof.encode(&mut w);
        }
        w.finish()
    }

    pub fn byte_len(&self) -> usize {
        self.to_bytes().len()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        r.expect_magic(MAGIC)?;
        let v = r.u8("version")?;
        if v != VERSION {
            return Err(DecodeError::Version(v));
        }
        let c = Construction::from_tag(r.u8("construction")?).ok_or(DecodeError::Invalid("construction"))?;
        let n = r.count(9, "segment count")?;
        let mut segments = Vec::with_capacity(n);
        for _ in 0..n {
            segments.push(match r.u8("segment tag")? {
                0x01 => {
                    let height = r.u64("height")?;
                    Segment::Block { height, root: decode_node(c, &mut r, 0)? }
                }
                0x02 => {
                    let owner = r.u64("owner")?;
                    let k = r.u64("distance")?;
                    let pre_skipped_hash = r.array("pre-skipped hash")?;
                    let digest = AccValue::decode(c, &mut r)?;
                    let ns = r.count(32, "sibling count")?;
                    let mut siblings = Vec::with_capacity(ns);
                    for _ in 0..ns {
                        siblings.push(r.array("sibling")?);
                    }
                    let evidence = decode_evidence(c, &mut r)?;
                    Segment::Skip(SkipProof { owner, k, pre_skipped_hash, digest, siblings, evidence })
                }
                _ => return Err(DecodeError::Invalid("segment tag")),
            });
        }
        let nb = r.count(8, "batch count")?;
        let mut batches = Vec::with_capacity(nb);
        for _ in 0..nb {
            let clause = Clause::decode(&mut r)?;
            let digest = AccValue::decode(c, &mut r)?;
            let proof = DisjointProof::decode(c, &mut r)?;
            batches.push(BatchProof { clause, digest, proof });
        }
        r.finish()?;
        Ok(VerificationObject { construction: c, segments, batches })
    }
}

fn walk(n: &VoNode, f: &mut impl FnMut(&Evidence, &AccValue)) {
    match n {
        VoNode::Mismatch { evidence, digest, .. } => f(evidence, digest),
        VoNode::Branch { left, right, .. } => {
            walk(left, f);
            walk(right, f);
        }
        _ => {}
    }
}

fn walk_mut(n: &mut VoNode, f: &mut impl FnMut(&mut Evidence, &AccValue)) {
    match n {
        VoNode::Mismatch { evidence, digest, .. } => f(evidence, digest),
        VoNode::Branch { left, right, .. } => {
            walk_mut(left, f);
            walk_mut(right, f);
        }
        _ => {}
    }
}

fn encode_evidence(e: &Evidence, w: &mut Writer) {
    match e {
        Evidence::Single { clause, proof } => {
            w.u8(0x00);
            clause.encode(w);
            proof.encode(w);
        }
        Evidence::Batch(i) => {
            w.u8(0x01);
            w.u32(*i);
        }
    }
}

fn decode_evidence(c: Construction, r: &mut Reader<'_>) -> Result<Evidence, DecodeError> {
    match r.u8("evidence tag")? {
        0x00 => {
            let clause = Clause::decode(r)?;
            let proof = DisjointProof::decode(c, r)?;
            Ok(Evidence::Single { clause, proof })
        }
        0x01 => Ok(Evidence::Batch(r.u32("batch index")?)),
        _ => Err(DecodeError::Invalid("evidence tag")),
    }
}

fn encode_node(n: &VoNode, w: &mut Writer) {
    match n {
        VoNode::Object { object, digest } => {
            w.u8(0x10);
            object.encode(w);
            digest.encode(w);
        }
        VoNode::Hidden { t, body_hash, digest } => {
            w.u8(0x11);
            w.u64(*t);
            w.raw(body_hash);
            digest.encode(w);
        }
        VoNode::Mismatch { inner, digest, evidence } => {
            w.u8(0x12);
            w.raw(inner);
            digest.encode(w);
            encode_evidence(evidence, w);
        }
        VoNode::Branch { digest, left, right } => {
            w.u8(0x13);
            match digest {
                Some(d) => {
                    w.u8(1);
                    d.encode(w);
                }
                None => w.u8(0),
            }
            encode_node(left, w);
            encode_node(right, w);
        }
    }
}

fn decode_node(c: Construction, r: &mut Reader<'_>, depth: usize) -> Result<VoNode, DecodeError> {
    if depth > MAX_DEPTH {
        return Err(DecodeError::Invalid("tree depth"));
    }
    Ok(match r.u8("node tag")? {
        0x10 => {
            let object = TemporalObject::decode(r)?;
            VoNode::Object { object, digest: AccValue::decode(c, r)? }
        }
        0x11 => {
            let t = r.u64("timestamp")?;
            let body_hash = r.array("body hash")?;
            VoNode::Hidden { t, body_hash, digest: AccValue::decode(c, r)? }
        }
        0x12 => {
            let inner = r.array("inner hash")?;
            let digest = AccValue::decode(c, r)?;
            VoNode::Mismatch { inner, digest, evidence: decode_evidence(c, r)? }
        }
        0x13 => {
            let digest = match r.u8("digest flag")? {
                0 => None,
                1 => Some(AccValue::decode(c, r)?),
                _ => return Err(DecodeError::Invalid("digest flag")),
            };
            let left = Box::new(decode_node(c, r, depth + 1)?);
            let right = Box::new(decode_node(c, r, depth + 1)?);
            VoNode::Branch { digest, left, right }
        }
        _ => return Err(DecodeError::Invalid("node tag")),
    })
}
