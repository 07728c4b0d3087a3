//! Lazy authentication: mismatch evidence is buffered across blocks and
//! released only with the next match or after a block-count threshold.
//!
//! Consecutive blocks whose roots mismatch on the same clause are tracked on
//! a stack. When a new block's skip list holds an entry spanning exactly the
//! top stack entries, their per-block proofs are folded into one aggregate
//! proof for the skip digest.

use crate::acc::{AccValue, DisjointProof};
use crate::chain::{Block, TemporalObject};
use crate::query::{Evidence, Segment, SkipProof, VerificationObject, VoNode};
use crate::transform::{select_mismatch_clause, Clause, CnfCondition};

use super::iptree::QueryId;
use super::process::{answer_block, ProofCache};
use super::{Delivery, SubscribeError};

/// Default number of buffered blocks that forces a flush.
pub const DEFAULT_LAZY_THRESHOLD: u64 = 16;

#[derive(Clone, Debug)]
struct StackEntry {
    k: u64,
    clause: Clause,
    proof: DisjointProof,
    digest: AccValue,
}

/// Buffered evidence of one subscription.
#[derive(Clone, Debug, Default)]
pub struct LazyState {
    /// VO fragments in increasing height order, one per block or skip.
    fragments: Vec<Segment>,
    results: Vec<TemporalObject>,
    first: Option<u64>,
    stack: Vec<StackEntry>,
    /// Skips substituted for buffered blocks so far.
    pub merges: u64,
}

impl LazyState {
    /// Number of blocks currently buffered.
    pub fn buffered(&self, tip: u64) -> u64 {
        self.first.map_or(0, |f| tip + 1 - f)
    }

    /// Sum of the stack's jump distances, i.e. the trailing run of blocks
    /// that mismatch on the stack's clause.
    pub fn stacked_blocks(&self) -> u64 {
        self.stack.iter().map(|e| e.k).sum()
    }

    /// Releases everything buffered up to `tip`.
    pub fn flush(&mut self, query: QueryId, tip: u64, construction: crate::acc::Construction) -> Option<Delivery> {
        let first = self.first.take()?;
        let mut vo = VerificationObject::empty(construction);
        vo.segments = std::mem::take(&mut self.fragments);
        vo.segments.reverse();
        self.stack.clear();
        Some(Delivery { query, span: (first, tip), results: std::mem::take(&mut self.results), vo })
    }

    /// Tries to replace the top stack entries with one skip of `block`.
    fn fold(&mut self, block: &Block, clause: &Clause, cache: &ProofCache<'_>) -> Result<(), SubscribeError> {
        let acc = cache.accumulator();
        for s in block.skips.iter().rev() {
            let mut total = 0;
            let mut m = 0;
            for e in self.stack.iter().rev() {
                total += e.k;
                m += 1;
                if total >= s.k {
                    break;
                }
            }
            if total != s.k || m < 2 {
                continue;
            }
            let top = &self.stack[self.stack.len() - m..];
            let digests: Vec<AccValue> = top.iter().map(|e| e.digest).collect();
            if acc.sum(&digests)? != s.digest {
                continue;
            }
            let proofs: Vec<DisjointProof> = top.iter().map(|e| e.proof).collect();
            let proof = acc.proof_sum(&proofs)?;
            self.stack.truncate(self.stack.len() - m);
            self.fragments.truncate(self.fragments.len() - m);
            let siblings = block.skips.iter().filter(|x| x.k != s.k).map(|x| x.hash).collect();
            self.fragments.push(Segment::Skip(SkipProof {
                owner: block.height,
                k: s.k,
                pre_skipped_hash: s.pre_skipped_hash,
                digest: s.digest,
                siblings,
                evidence: Evidence::Single { clause: clause.clone(), proof },
            }));
            self.stack.push(StackEntry { k: s.k, clause: clause.clone(), proof, digest: s.digest });
            self.merges += 1;
            return Ok(());
        }
        Ok(())
    }
}

/// Processes one block for one subscription, returning a delivery when the
/// block yields results or the buffer reaches `threshold` blocks.
pub fn process_block_lazy(
    state: &mut LazyState,
    block: &Block,
    query: QueryId,
    cond: &CnfCondition,
    cache: &mut ProofCache<'_>,
    threshold: u64,
) -> Result<Option<Delivery>, SubscribeError> {
    let acc = cache.accumulator();
    if !acc.construction().supports_aggregation() {
        return Err(SubscribeError::Unsupported(acc.construction()));
    }
    let ix = block.index.as_ref().ok_or(SubscribeError::NoIndex(block.height))?;
    cache.start_block(block.height);
    state.first.get_or_insert(block.height);
    let root = ix.root();
    let clause = root
        .digest
        .and_then(|_| select_mismatch_clause(cond, |_, c| acc.provably_disjoint(&root.w, &c.to_multiset())))
        .map(|i| cond.clauses[i].clone());
    match clause {
        Some(c) => {
            if state.stack.last().is_some_and(|e| e.clause == c) {
                state.fold(block, &c, cache)?;
            } else {
                state.stack.clear();
            }
            let proof = cache.proof(ix.root, &root.w, &c)?;
            let digest = root.digest.expect("checked above");
            state.fragments.push(Segment::Block {
                height: block.height,
                root: VoNode::Mismatch { inner: root.inner, digest, evidence: Evidence::Single { clause: c.clone(), proof } },
            });
            state.stack.push(StackEntry { k: 1, clause: c, proof, digest });
        }
        None => {
            let ans = answer_block(block, cond, cache)?;
            state.stack.clear();
            state.fragments.push(Segment::Block { height: block.height, root: ans.root });
            if !ans.results.is_empty() {
                state.results.extend(ans.results);
                return Ok(state.flush(query, block.height, acc.construction()));
            }
        }
    }
    if state.buffered(block.height) >= threshold {
        return Ok(state.flush(query, block.height, acc.construction()));
    }
    Ok(None)
}
