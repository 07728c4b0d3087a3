//! Intra-block index: a Merkle tree whose nodes also commit to the
//! accumulated attribute multiset of their subtree.
//!
//! Node hashes:
//! * leaf: `H(id(o) | digest)`
//! * internal with digest: `H(H(h_l | h_r) | digest)`
//! * internal without digest (plain Merkle mode): `H(h_l | h_r)`

use crate::acc::{AccError, AccValue, Accumulator, Multiset};
use crate::codec::{DecodeError, Reader, Writer};
use crate::hash::{hash_parts, Digest};

use super::object::TemporalObject;
use super::ChainError;

/// What a node points at.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    /// Index into the block's object list.
    Leaf(u32),
    /// Indices of the left and right children in the node arena.
    Branch(u32, u32),
}

/// One node of the intra-block index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntraNode {
    pub kind: NodeKind,
    /// Object id for leaves, `H(h_l | h_r)` for internal nodes.
    pub inner: Digest,
    /// Attribute digest; absent on internal nodes of plain Merkle trees.
    pub digest: Option<AccValue>,
    /// Subtree multiset (multiset sum of the children). Empty whenever
    /// `digest` is absent.
    pub w: Multiset,
    pub hash: Digest,
}

/// Node arena plus root index. Nodes are stored children-before-parents.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntraIndex {
    pub nodes: Vec<IntraNode>,
    pub root: u32,
}

/// Combines an inner hash with an optional digest into a node hash.
pub fn node_hash(inner: &Digest, digest: Option<&AccValue>) -> Digest {
    match digest {
        Some(d) => hash_parts(&[inner, &d.to_bytes()]),
        None => *inner,
    }
}

pub fn branch_inner(left: &Digest, right: &Digest) -> Digest {
    hash_parts(&[left, right])
}

impl IntraIndex {
    /// Builds the index bottom-up with greedy similarity pairing: at each level
    /// the remaining node with the largest multiset is paired with the
    /// remaining node of highest Jaccard similarity (first wins on ties), and
    /// an odd node out is carried to the end of the next level.
    ///
    /// With `internal_digests = false` internal nodes form a plain Merkle tree.
    pub fn build(
        objects: &[TemporalObject],
        leaf_sets: Vec<Multiset>,
        acc: &Accumulator,
        internal_digests: bool,
    ) -> Result<Self, ChainError> {
        if objects.is_empty() {
            return Err(ChainError::EmptyBlock);
        }
        let mut nodes = Vec::with_capacity(2 * objects.len());
        for (i, (o, w)) in objects.iter().zip(leaf_sets).enumerate() {
            let digest = acc.setup(&w)?;
            let inner = o.id();
            nodes.push(IntraNode {
                kind: NodeKind::Leaf(i as u32),
                hash: node_hash(&inner, Some(&digest)),
                inner,
                digest: Some(digest),
                w,
            });
        }
        // Pairing always looks at leaf-derived multisets so that the tree shape
        // does not depend on whether internal digests are kept.
        let mut shape: Vec<Multiset> = nodes.iter().map(|n| n.w.clone()).collect();
        let mut level: Vec<u32> = (0..nodes.len() as u32).collect();
        while level.len() > 1 {
            let mut next = Vec::with_capacity(level.len().div_ceil(2));
            while level.len() > 1 {
                let li = argmax_by(&level, |n| shape[*n as usize].len() as f64);
                let l = level.remove(li);
                let ri = argmax_by(&level, |n| shape[l as usize].jaccard(&shape[*n as usize]));
                let r = level.remove(ri);
                let w_sum = shape[l as usize].sum(&shape[r as usize]);
                let node = branch(&nodes, l, r, &w_sum, acc, internal_digests)?;
                nodes.push(node);
                shape.push(w_sum);
                next.push(nodes.len() as u32 - 1);
            }
            next.append(&mut level);
            level = next;
        }
        Ok(IntraIndex { root: level[0], nodes })
    }

    pub fn root(&self) -> &IntraNode {
        &self.nodes[self.root as usize]
    }

    pub fn node(&self, i: u32) -> &IntraNode {
        &self.nodes[i as usize]
    }

    pub fn encode(&self, w: &mut Writer) {
        w.len_prefix(self.nodes.len());
        for n in &self.nodes {
            match n.kind {
                NodeKind::Leaf(i) => {
                    w.u8(0);
                    w.u32(i);
                }
                NodeKind::Branch(l, r) => {
                    w.u8(1);
                    w.u32(l);
                    w.u32(r);
                }
            }
            w.raw(&n.inner);
            w.raw(&n.hash);
            match &n.digest {
                Some(d) => {
                    w.u8(1);
                    d.encode(w);
                }
                None => w.u8(0),
            }
            n.w.encode(w);
        }
        w.u32(self.root);
    }

    pub fn decode(acc: &Accumulator, r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let n = r.count(70, "node count")?;
        let mut nodes = Vec::with_capacity(n);
        for i in 0..n {
            let kind = match r.u8("node kind")? {
                0 => NodeKind::Leaf(r.u32("leaf index")?),
                1 => {
                    let (a, b) = (r.u32("child")?, r.u32("child")?);
                    if a as usize >= i || b as usize >= i {
                        return Err(DecodeError::Invalid("child index"));
                    }
                    NodeKind::Branch(a, b)
                }
                _ => return Err(DecodeError::Invalid("node kind")),
            };
            let inner = r.array("inner hash")?;
            let hash = r.array("node hash")?;
            let digest = match r.u8("digest flag")? {
                0 => None,
                1 => Some(AccValue::decode(acc.construction(), r)?),
                _ => return Err(DecodeError::Invalid("digest flag")),
            };
            let w = Multiset::decode(r)?;
            nodes.push(IntraNode { kind, inner, digest, w, hash });
        }
        let root = r.u32("root")?;
        if root as usize >= nodes.len() {
            return Err(DecodeError::Invalid("root index"));
        }
        Ok(IntraIndex { nodes, root })
    }
}

fn branch(
    nodes: &[IntraNode],
    l: u32,
    r: u32,
    w_sum: &Multiset,
    acc: &Accumulator,
    internal_digests: bool,
) -> Result<IntraNode, AccError> {
    let (nl, nr) = (&nodes[l as usize], &nodes[r as usize]);
    let inner = branch_inner(&nl.hash, &nr.hash);
    if !internal_digests {
        return Ok(IntraNode { kind: NodeKind::Branch(l, r), inner, digest: None, w: Multiset::new(), hash: inner });
    }
    let digest = match (acc.construction().supports_aggregation(), nl.digest, nr.digest) {
        (true, Some(a), Some(b)) => acc.sum(&[a, b])?,
        _ => acc.setup(w_sum)?,
    };
    Ok(IntraNode {
        kind: NodeKind::Branch(l, r),
        hash: node_hash(&inner, Some(&digest)),
        inner,
        digest: Some(digest),
        w: w_sum.clone(),
    })
}

/// Position of the first maximal element.
fn argmax_by<T>(items: &[T], mut key: impl FnMut(&T) -> f64) -> usize {
    let mut best = 0;
    let mut best_key = f64::NEG_INFINITY;
    for (i, it) in items.iter().enumerate() {
        let k = key(it);
        if k > best_key {
            best = i;
            best_key = k;
        }
    }
    best
}
