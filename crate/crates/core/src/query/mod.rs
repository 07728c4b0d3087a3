//! Service-provider query processing: per-object checks, intra-block index
//! traversal, skip-list jumps over mismatching block runs, VO assembly and
//! batching of proofs that share a clause.

mod traverse;
mod vo;
mod window;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

pub use vo::{BatchProof, Evidence, Segment, SkipProof, VerificationObject, VoNode};
pub use window::{covered_span, placement, Placement};

pub(crate) use traverse::Traversal;

use crate::acc::{AccError, AccValue, Accumulator, DisjointProof};
use crate::chain::{Block, Chain, IndexMode, TemporalObject};
use crate::transform::{transform_query, CnfCondition, Query, Schema, TransformError};

/// Errors raised while answering a query.
#[derive(Debug, Error)]
pub enum QueryError {
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Acc(#[from] AccError),
    #[error("a window query needs a time window")]
    MissingWindow,
    #[error("inverted time window [{0}, {1}]")]
    InvertedWindow(u64, u64),
}

/// How the service provider answers a query.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct QueryOptions {
    /// Highest index layer to use; capped by what the chain maintains.
    pub index: IndexMode,
    /// Aggregate proofs that share a clause (aggregating constructions only).
    pub batched: bool,
    /// Worker threads for proof generation.
    pub threads: usize,
}

impl Default for QueryOptions {
    fn default() -> Self {
        QueryOptions { index: IndexMode::Both, batched: false, threads: 1 }
    }
}

impl QueryOptions {
    pub fn new(index: IndexMode, batched: bool) -> Self {
        QueryOptions { index, batched, threads: 1 }
    }
}

/// Counters describing how a query was answered.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct QueryStats {
    pub blocks_scanned: u64,
    pub skips_taken: u64,
    pub blocks_skipped: u64,
    pub disjoint_proofs: u64,
    pub batches: u64,
    pub vo_bytes: u64,
}

/// Result set, verification object and counters.
#[derive(Clone, Debug)]
pub struct QueryResponse {
    pub results: Vec<TemporalObject>,
    pub vo: VerificationObject,
    pub stats: QueryStats,
}

/// Checks one object against a condition, returning it when it matches and
/// otherwise a pruned leaf with a disjointness proof.
pub fn query_single(
    o: &TemporalObject,
    cond: &CnfCondition,
    schema: &Schema,
    acc: &Accumulator,
) -> Result<(Option<TemporalObject>, VoNode), QueryError> {
    let w = o.transformed(schema)?;
    let digest = acc.setup(&w)?;
    let t = Traversal::new(acc, cond);
    match t.mismatch(&w) {
        None => Ok((Some(o.clone()), VoNode::Object { object: o.clone(), digest })),
        Some(c) => {
            let clause = cond.clauses[c].clone();
            let proof = acc.prove_disjoint(&w, &t_clause(&t, c))?;
            Ok((None, VoNode::Mismatch { inner: o.id(), digest, evidence: Evidence::Single { clause, proof } }))
        }
    }
}

fn t_clause(t: &Traversal<'_, '_>, c: usize) -> crate::acc::Multiset {
    t.cond.clauses[c].to_multiset()
}

/// Traverses one block's intra-block index, returning the matching objects
/// and the block's VO tree with one proof per pruned subtree.
pub fn query_intra(block: &Block, cond: &CnfCondition, acc: &Accumulator) -> Result<(Vec<TemporalObject>, VoNode), QueryError> {
    let mut t = Traversal::new(acc, cond);
    let root = t.block(block, None, false);
    let mut vo = VerificationObject::empty(acc.construction());
    vo.segments.push(Segment::Block { height: block.height, root });
    let results = t.finalize(&mut vo, false, 1)?;
    let Some(Segment::Block { root, .. }) = vo.segments.pop() else { unreachable!() };
    Ok((results, root))
}

/// Answers a time-window query over `chain`.
///
/// Blocks are visited from the newest in the window backwards. At cursor `p`
/// the skip list of block `p + 1` is consulted from the largest distance
/// down, and the first entry that provably mismatches and spans only blocks
/// entirely inside the window is taken. Otherwise block `p` is traversed.
/// Blocks straddling a window edge disclose out-of-window leaves by
/// timestamp only.
pub fn query_window(chain: &Chain, q: &Query, opts: QueryOptions) -> Result<QueryResponse, QueryError> {
    let window = q.window.ok_or(QueryError::MissingWindow)?;
    if window.0 > window.1 {
        return Err(QueryError::InvertedWindow(window.0, window.1));
    }
    let cond = transform_query(q, &chain.config().schema)?;
    let acc = chain.accumulator();
    let mode = opts.index.min(chain.config().mode);
    let headers = chain.headers();
    let mut vo = VerificationObject::empty(acc.construction());
    let mut stats = QueryStats::default();
    let mut t = Traversal::new(acc, &cond);

    if let Some((lo, hi)) = covered_span(&headers, window) {
        let inside = |h: u64| placement(&headers, h, window) == Placement::Inside;
        // Fully-inside blocks form one contiguous run; skips must stay in it.
        let first_inside = (lo..=hi).find(|h| inside(*h));
        let mut p = hi;
        while p >= lo {
            if let (IndexMode::Both, Some(start), true) = (mode, first_inside, inside(p)) {
                if let Some(owner) = chain.block(p + 1) {
                    if let Some(s) = t.skip(owner, start) {
                        stats.skips_taken += 1;
                        stats.blocks_skipped += s.k;
                        p -= s.k;
                        vo.segments.push(Segment::Skip(s));
                        continue;
                    }
                }
            }
            let b = chain.block(p).unwrap();
            let w = (!inside(p)).then_some(window);
            let root = t.block(b, w, mode == IndexMode::Nil);
            stats.blocks_scanned += 1;
            vo.segments.push(Segment::Block { height: p, root });
            p -= 1;
        }
    }
    let results = t.finalize(&mut vo, opts.batched, opts.threads)?;
    stats.disjoint_proofs = vo.proof_count() as u64;
    stats.batches = vo.batches.len() as u64;
    stats.vo_bytes = vo.byte_len() as u64;
    Ok(QueryResponse { results, vo, stats })
}

/// Regroups single-proof entries that share a clause into batches whose
/// aggregated proof is the sum of the members' proofs. On constructions
/// without aggregation the VO is returned unchanged.
pub fn batch_compact(mut vo: VerificationObject, acc: &Accumulator) -> Result<VerificationObject, QueryError> {
    if !acc.construction().supports_aggregation() {
        return Ok(vo);
    }
    let mut groups: Vec<(crate::transform::Clause, Vec<AccValue>, Vec<DisjointProof>)> = Vec::new();
    let mut index: BTreeMap<crate::transform::Clause, usize> = BTreeMap::new();
    vo.for_each_evidence(|e, d| {
        if let Evidence::Single { clause, proof } = e {
            let g = *index.entry(clause.clone()).or_insert_with(|| {
                groups.push((clause.clone(), Vec::new(), Vec::new()));
                groups.len() - 1
            });
            groups[g].1.push(*d);
            groups[g].2.push(*proof);
        }
    });
    let base = vo.batches.len() as u32;
    let mut batch_of: BTreeMap<crate::transform::Clause, u32> = BTreeMap::new();
    for (clause, digests, proofs) in &groups {
        if digests.len() > 1 {
            batch_of.insert(clause.clone(), base + batch_of.len() as u32);
            vo.batches.push(BatchProof { clause: clause.clone(), digest: acc.sum(digests)?, proof: acc.proof_sum(proofs)? });
        }
    }
    vo.for_each_evidence_mut(|e, _| {
        if let Evidence::Single { clause, .. } = e {
            if let Some(b) = batch_of.get(clause) {
                *e = Evidence::Batch(*b);
            }
        }
    });
    Ok(vo)
}
