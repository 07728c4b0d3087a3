//! Service-provider traversal of intra-block indexes and skip lists.
//!
//! The traversal records every pruning decision as a proof job and leaves a
//! placeholder `Evidence::Batch(job_id)` in the VO; `finalize` later replaces
//! placeholders with real single or batched proofs.

use std::collections::BTreeMap;

use crate::acc::{AccError, AccValue, Accumulator, DisjointProof, Multiset};
use crate::chain::{Block, IntraIndex, NodeKind, TemporalObject};
use crate::transform::{matches, select_mismatch_clause, CnfCondition};

use super::vo::{BatchProof, Evidence, SkipProof, VerificationObject, VoNode};

/// A deferred disjointness proof.
pub(crate) struct Job<'a> {
    pub w: &'a Multiset,
    pub clause: usize,
    pub digest: AccValue,
}

pub(crate) struct Traversal<'a, 'c> {
    pub acc: &'a Accumulator,
    pub cond: &'c CnfCondition,
    clause_sets: Vec<Multiset>,
    pub jobs: Vec<Job<'a>>,
    pub results: Vec<TemporalObject>,
}

impl<'a, 'c> Traversal<'a, 'c> {
    pub fn new(acc: &'a Accumulator, cond: &'c CnfCondition) -> Self {
        let clause_sets = cond.clauses.iter().map(|c| c.to_multiset()).collect();
        Traversal { acc, cond, clause_sets, jobs: Vec::new(), results: Vec::new() }
    }

    /// The clause selected as provable mismatch evidence for `w`, if any.
    pub fn mismatch(&self, w: &Multiset) -> Option<usize> {
        select_mismatch_clause(self.cond, |i, _| self.acc.provably_disjoint(w, &self.clause_sets[i]))
    }

    fn job(&mut self, w: &'a Multiset, clause: usize, digest: AccValue) -> Evidence {
        self.jobs.push(Job { w, clause, digest });
        Evidence::Batch(self.jobs.len() as u32 - 1)
    }

    /// Builds the VO tree of one block. With `per_object`, only leaves are
    /// considered for pruning. Leaves outside `window` are disclosed by
    /// timestamp only.
    pub fn block(&mut self, block: &'a Block, window: Option<(u64, u64)>, per_object: bool) -> VoNode {
        let ix = block.index.as_ref().expect("data block");
        self.node(block, ix, ix.root, window, per_object)
    }

    fn node(&mut self, block: &'a Block, ix: &'a IntraIndex, i: u32, window: Option<(u64, u64)>, per_object: bool) -> VoNode {
        let n = ix.node(i);
        let leaf = matches!(n.kind, NodeKind::Leaf(_));
        if let NodeKind::Leaf(oi) = n.kind {
            let o = &block.objects[oi as usize];
            if window.is_some_and(|(s, e)| o.t < s || o.t > e) {
                return VoNode::Hidden { t: o.t, body_hash: o.body_hash(), digest: n.digest.unwrap() };
            }
        }
        if let (Some(d), true) = (n.digest, leaf || !per_object) {
            if let Some(c) = self.mismatch(&n.w) {
                let evidence = self.job(&n.w, c, d);
                return VoNode::Mismatch { inner: n.inner, digest: d, evidence };
            }
        }
        match n.kind {
            NodeKind::Leaf(oi) => {
                let o = &block.objects[oi as usize];
                if matches(&n.w, self.cond) {
                    self.results.push(o.clone());
                }
                VoNode::Object { object: o.clone(), digest: n.digest.unwrap() }
            }
            NodeKind::Branch(l, r) => VoNode::Branch {
                digest: n.digest,
                left: Box::new(self.node(block, ix, l, window, per_object)),
                right: Box::new(self.node(block, ix, r, window, per_object)),
            },
        }
    }

    /// Tries the skip list of `owner` for a mismatching entry whose span ends
    /// at `owner - 1` and starts no earlier than `min_start`, largest distance
    /// first.
    pub fn skip(&mut self, owner: &'a Block, min_start: u64) -> Option<SkipProof> {
        for s in owner.skips.iter().rev() {
            if owner.height - s.k < min_start {
                continue;
            }
            if let Some(c) = self.mismatch(&s.w) {
                let evidence = self.job(&s.w, c, s.digest);
                let siblings = owner.skips.iter().filter(|x| x.k != s.k).map(|x| x.hash).collect();
                return Some(SkipProof {
                    owner: owner.height,
                    k: s.k,
                    pre_skipped_hash: s.pre_skipped_hash,
                    digest: s.digest,
                    siblings,
                    evidence,
                });
            }
        }
        None
    }

    /// Computes every pending proof and writes final evidence into `vo`.
    ///
    /// With `batched` (aggregating constructions only), jobs sharing a clause
    /// are proven once over the sum of their multisets. Groups are ordered by
    /// first occurrence.
    pub fn finalize(self, vo: &mut VerificationObject, batched: bool, threads: usize) -> Result<Vec<TemporalObject>, AccError> {
        let batched = batched && self.acc.construction().supports_aggregation();
        let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
        if batched {
            let mut by_clause: BTreeMap<usize, usize> = BTreeMap::new();
            for (j, job) in self.jobs.iter().enumerate() {
                let g = *by_clause.entry(job.clause).or_insert_with(|| {
                    groups.push((job.clause, Vec::new()));
                    groups.len() - 1
                });
                groups[g].1.push(j);
            }
        } else {
            groups = self.jobs.iter().enumerate().map(|(j, job)| (job.clause, vec![j])).collect();
        }
        let sums: Vec<Option<Multiset>> = groups
            .iter()
            .map(|(_, m)| (m.len() > 1).then(|| m.iter().fold(Multiset::new(), |a, j| a.sum(self.jobs[*j].w))))
            .collect();
        let tasks: Vec<(&Multiset, &Multiset)> = groups
            .iter()
            .zip(&sums)
            .map(|((c, m), s)| (s.as_ref().unwrap_or(self.jobs[m[0]].w), &self.clause_sets[*c]))
            .collect();
        let proofs = prove_all(self.acc, &tasks, threads)?;

        let mut final_evidence: Vec<Option<Evidence>> = vec![None; self.jobs.len()];
        for ((c, members), proof) in groups.iter().zip(proofs) {
            let clause = self.cond.clauses[*c].clone();
            if members.len() == 1 {
                final_evidence[members[0]] = Some(Evidence::Single { clause, proof });
            } else {
                let digests: Vec<AccValue> = members.iter().map(|j| self.jobs[*j].digest).collect();
                let digest = self.acc.sum(&digests)?;
                vo.batches.push(BatchProof { clause, digest, proof });
                for j in members {
                    final_evidence[*j] = Some(Evidence::Batch(vo.batches.len() as u32 - 1));
                }
            }
        }
        vo.for_each_evidence_mut(|e, _| {
            if let Evidence::Batch(j) = e {
                *e = final_evidence[*j as usize].take().expect("each job is referenced once");
            }
        });
        Ok(self.results)
    }
}

/// Proves every `(X1, X2)` pair, split across up to `threads` workers.
pub(crate) fn prove_all(
    acc: &Accumulator,
    tasks: &[(&Multiset, &Multiset)],
    threads: usize,
) -> Result<Vec<DisjointProof>, AccError> {
    let threads = threads.max(1).min(tasks.len().max(1));
    if threads == 1 {
        return tasks.iter().map(|(a, b)| acc.prove_disjoint(a, b)).collect();
    }
    let chunk = tasks.len().div_ceil(threads);
    std::thread::scope(|s| {
        let handles: Vec<_> = tasks
            .chunks(chunk)
            .map(|part| s.spawn(move || part.iter().map(|(a, b)| acc.prove_disjoint(a, b)).collect::<Result<Vec<_>, _>>()))
            .collect();
        let mut out = Vec::with_capacity(tasks.len());
        for h in handles {
            out.extend(h.join().expect("proof worker panicked")?);
        }
        Ok(out)
    })
}
