//! Light-client verification of query results against block headers.
//!
//! The verifier sees only headers, the chain configuration, public
//! parameters, the query, the claimed results and the VO. It recomputes
//! every covered Merkle root and skip-list root, checks each disjointness
//! proof against a clause it derives from the query itself, checks that the
//! VO tiles exactly the heights the window touches, and re-evaluates the
//! query on every disclosed object.

mod report;

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

pub use report::{RejectKind, Rejection, VerifyReport, VerifyStats};

use crate::acc::{AccValue, Accumulator, Construction};
use crate::chain::intra::{branch_inner, node_hash};
use crate::chain::skip::{distances_at, entry_hash, pre_skipped_hash, skip_list_root};
use crate::chain::{object_id, BlockHeader, ChainConfig, TemporalObject};
use crate::hash::Digest;
use crate::query::{covered_span, placement, BatchProof, Evidence, Placement, Segment, VerificationObject, VoNode};
use crate::transform::{transform_query, Clause, CnfCondition, Query};

/// Checks one batch: the aggregate digest must equal the sum of the member
/// digests, and the aggregated proof must verify against it.
pub fn verify_disjoint_batch(acc: &Accumulator, batch: &BatchProof, members: &[AccValue]) -> bool {
    if members.is_empty() {
        return false;
    }
    let sum = if members.len() == 1 {
        members[0]
    } else {
        match acc.sum(members) {
            Ok(s) => s,
            Err(_) => return false,
        }
    };
    if sum != batch.digest {
        return false;
    }
    match acc.setup(&batch.clause.to_multiset()) {
        Ok(c) => acc.verify_disjoint(&sum, &c, &batch.proof),
        Err(_) => false,
    }
}

/// A light client's view of one chain.
pub struct Verifier<'a> {
    headers: &'a [BlockHeader],
    config: &'a ChainConfig,
    acc: &'a Accumulator,
}

type Check<T> = Result<T, Rejection>;

fn reject<T>(kind: RejectKind, detail: impl Into<String>) -> Check<T> {
    Err(Rejection { kind, detail: detail.into() })
}

struct Walk<'q> {
    cond: &'q CnfCondition,
    clause_digests: HashMap<Clause, AccValue>,
    batch_members: BTreeMap<u32, Vec<AccValue>>,
    revealed: Vec<TemporalObject>,
    stats: VerifyStats,
}

impl<'a> Verifier<'a> {
    pub fn new(headers: &'a [BlockHeader], config: &'a ChainConfig, acc: &'a Accumulator) -> Self {
        Verifier { headers, config, acc }
    }

    /// Verifies a time-window query answer.
    pub fn verify_window(&self, q: &Query, results: &[TemporalObject], vo: &VerificationObject) -> VerifyReport {
        let start = Instant::now();
        let mut stats = VerifyStats::default();
        let outcome = match q.window {
            None => reject(RejectKind::Malformed, "query has no time window"),
            Some((s, e)) if s > e => reject(RejectKind::Malformed, "inverted time window"),
            Some(w) => {
                let span = if self.headers.is_empty() { None } else { covered_span(self.headers, w) };
                self.run(q, span, Some(w), results, vo, &mut stats)
            }
        };
        VerifyReport::new(outcome, stats, start.elapsed())
    }

    /// Verifies an answer covering exactly the blocks `span.0 ..= span.1`
    /// without a time window (subscription deliveries).
    pub fn verify_span(&self, q: &Query, span: (u64, u64), results: &[TemporalObject], vo: &VerificationObject) -> VerifyReport {
        let start = Instant::now();
        let mut stats = VerifyStats::default();
        let tip = self.headers.len() as u64;
        let outcome = if span.0 == 0 || span.0 > span.1 || span.1 >= tip {
            reject(RejectKind::Malformed, format!("span {span:?} is not a range of known data blocks"))
        } else {
            self.run(q, Some(span), None, results, vo, &mut stats)
        };
        VerifyReport::new(outcome, stats, start.elapsed())
    }

    fn run(
        &self,
        q: &Query,
        span: Option<(u64, u64)>,
        window: Option<(u64, u64)>,
        results: &[TemporalObject],
        vo: &VerificationObject,
        stats: &mut VerifyStats,
    ) -> Check<()> {
        if vo.construction != self.acc.construction() {
            return reject(RejectKind::Malformed, "VO built for a different accumulator construction");
        }
        let cond = match transform_query(q, &self.config.schema) {
            Ok(c) => c,
            Err(e) => return reject(RejectKind::Malformed, format!("query: {e}")),
        };
        stats.span = span;
        let mut walk = Walk {
            cond: &cond,
            clause_digests: HashMap::new(),
            batch_members: BTreeMap::new(),
            revealed: Vec::new(),
            stats: VerifyStats::default(),
        };
        let res = self.walk_all(&mut walk, span, window, vo);
        let res = res.and_then(|_| self.check_batches(&mut walk, vo));
        let res = res.and_then(|_| check_results(q, results, &walk.revealed));
        walk.stats.span = span;
        walk.stats.results = results.len() as u64;
        *stats = walk.stats;
        res
    }

    fn walk_all(&self, walk: &mut Walk<'_>, span: Option<(u64, u64)>, window: Option<(u64, u64)>, vo: &VerificationObject) -> Check<()> {
        let Some((lo, hi)) = span else {
            if !vo.segments.is_empty() || !vo.batches.is_empty() {
                return reject(RejectKind::Malformed, "VO has entries but the window covers no block");
            }
            return Ok(());
        };
        let mut next = hi;
        let mut done = false;
        for seg in &vo.segments {
            let (a, b) = seg.span();
            if done || b != next || a < lo || a > b {
                return reject(
                    RejectKind::UncoveredGap,
                    format!("segment covering heights {a}..={b} does not continue coverage at height {next}"),
                );
            }
            match seg {
                Segment::Block { height, root } => {
                    let place = match window {
                        Some(w) => placement(self.headers, *height, w),
                        None => Placement::Inside,
                    };
                    let got = self.node(walk, root, window.filter(|_| place != Placement::Inside), 0)?;
                    walk.stats.blocks_covered += 1;
                    if got != self.headers[*height as usize].merkle_root {
                        return reject(RejectKind::RootMismatch, format!("merkle root of block {height}"));
                    }
                }
                Segment::Skip(s) => {
                    self.skip(walk, s)?;
                    walk.stats.skips += 1;
                    walk.stats.blocks_covered += s.k;
                }
            }
            if a == lo {
                done = true;
            } else {
                next = a - 1;
            }
        }
        if !done {
            return reject(RejectKind::UncoveredGap, format!("heights {lo}..={next} are not covered"));
        }
        Ok(())
    }

    fn node(&self, walk: &mut Walk<'_>, n: &VoNode, window: Option<(u64, u64)>, depth: usize) -> Check<Digest> {
        if depth > 96 {
            return reject(RejectKind::Malformed, "VO tree too deep");
        }
        Ok(match n {
            VoNode::Object { object, digest } => {
                walk.revealed.push(object.clone());
                walk.stats.objects_revealed += 1;
                node_hash(&object.id(), Some(digest))
            }
            VoNode::Hidden { t, body_hash, digest } => {
                match window {
                    Some((s, e)) if *t < s || *t > e => {}
                    _ => return reject(RejectKind::UncoveredGap, format!("leaf with timestamp {t} withheld inside the window")),
                }
                walk.stats.hidden_leaves += 1;
                node_hash(&object_id(*t, body_hash), Some(digest))
            }
            VoNode::Mismatch { inner, digest, evidence } => {
                self.evidence(walk, evidence, digest)?;
                node_hash(inner, Some(digest))
            }
            VoNode::Branch { digest, left, right } => {
                let hl = self.node(walk, left, window, depth + 1)?;
                let hr = self.node(walk, right, window, depth + 1)?;
                node_hash(&branch_inner(&hl, &hr), digest.as_ref())
            }
        })
    }

    fn skip(&self, walk: &mut Walk<'_>, s: &crate::query::SkipProof) -> Check<()> {
        let owner = s.owner as usize;
        if owner >= self.headers.len() {
            return reject(RejectKind::Malformed, format!("skip owner {owner} is beyond the known chain"));
        }
        let ks = distances_at(s.owner, self.config.skip_len);
        let Some(pos) = ks.iter().position(|k| *k == s.k) else {
            return reject(RejectKind::Malformed, format!("block {owner} has no skip of distance {}", s.k));
        };
        if s.siblings.len() + 1 != ks.len() {
            return reject(RejectKind::Malformed, "wrong number of sibling skip hashes");
        }
        let hashes: Vec<Digest> = (owner - s.k as usize..owner).rev().map(|h| self.headers[h].hash()).collect();
        if pre_skipped_hash(&hashes) != s.pre_skipped_hash {
            return reject(RejectKind::RootMismatch, format!("pre-skipped hash of skip {} at block {owner}", s.k));
        }
        let own = entry_hash(&s.pre_skipped_hash, &s.digest);
        let mut all: Vec<Digest> = s.siblings.clone();
        all.insert(pos, own);
        if skip_list_root(&all) != self.headers[owner].skip_list_root {
            return reject(RejectKind::RootMismatch, format!("skip list root of block {owner}"));
        }
        self.evidence(walk, &s.evidence, &s.digest)
    }

    fn clause_digest(&self, walk: &mut Walk<'_>, clause: &Clause) -> Check<AccValue> {
        if !walk.cond.contains_clause(clause) {
            return reject(RejectKind::ClauseForgery, format!("{clause} is not a clause of the query"));
        }
        if let Some(d) = walk.clause_digests.get(clause) {
            return Ok(*d);
        }
        match self.acc.setup(&clause.to_multiset()) {
            Ok(d) => {
                walk.clause_digests.insert(clause.clone(), d);
                Ok(d)
            }
            Err(e) => reject(RejectKind::Malformed, format!("clause {clause}: {e}")),
        }
    }

    fn evidence(&self, walk: &mut Walk<'_>, e: &Evidence, digest: &AccValue) -> Check<()> {
        match e {
            Evidence::Single { clause, proof } => {
                let cd = self.clause_digest(walk, clause)?;
                walk.stats.pairing_checks += 1;
                walk.stats.proofs_checked += 1;
                if !self.acc.verify_disjoint(digest, &cd, proof) {
                    return reject(RejectKind::BadProof, format!("disjointness proof against {clause}"));
                }
                Ok(())
            }
            Evidence::Batch(i) => {
                walk.batch_members.entry(*i).or_default().push(*digest);
                Ok(())
            }
        }
    }

    fn check_batches(&self, walk: &mut Walk<'_>, vo: &VerificationObject) -> Check<()> {
        if vo.construction == Construction::Acc1 && !vo.batches.is_empty() {
            return reject(RejectKind::Malformed, "batches require an aggregating construction");
        }
        if let Some((i, _)) = walk.batch_members.range(vo.batches.len() as u32..).next() {
            return reject(RejectKind::Malformed, format!("reference to missing batch {i}"));
        }
        for (i, b) in vo.batches.iter().enumerate() {
            let Some(members) = walk.batch_members.get(&(i as u32)) else {
                return reject(RejectKind::Malformed, format!("batch {i} has no members"));
            };
            let members = members.clone();
            self.clause_digest(walk, &b.clause)?;
            let sum = if members.len() == 1 { Ok(members[0]) } else { self.acc.sum(&members) };
            if sum.ok() != Some(b.digest) {
                return reject(RejectKind::BatchMismatch, format!("batch {i} digest is not the sum of its members"));
            }
            walk.stats.pairing_checks += 1;
            walk.stats.batches_checked += 1;
            if !verify_disjoint_batch(self.acc, b, &members) {
                return reject(RejectKind::BadProof, format!("aggregated proof of batch {i} against {}", b.clause));
            }
        }
        Ok(())
    }
}

/// The claimed results must be exactly the disclosed objects that satisfy
/// the query. Disclosed objects that fail it are allowed: the traversal may
/// have been unable to prove their mismatch.
fn check_results(q: &Query, results: &[TemporalObject], revealed: &[TemporalObject]) -> Check<()> {
    let mut pool: HashMap<Digest, usize> = HashMap::new();
    for o in revealed {
        *pool.entry(o.id()).or_default() += 1;
    }
    let mut expected: HashMap<Digest, usize> = HashMap::new();
    for o in revealed.iter().filter(|o| q.evaluate(o.t, &o.v, &o.w)) {
        *expected.entry(o.id()).or_default() += 1;
    }
    let mut claimed: HashMap<Digest, usize> = HashMap::new();
    for r in results {
        let n = claimed.entry(r.id()).or_default();
        *n += 1;
        if pool.get(&r.id()).copied().unwrap_or(0) < *n {
            return reject(RejectKind::ForeignObject, format!("result with timestamp {} is not committed in the VO", r.t));
        }
        if !q.evaluate(r.t, &r.v, &r.w) {
            return reject(RejectKind::NonMatchingResult, format!("result with timestamp {} does not satisfy the query", r.t));
        }
    }
    for (id, n) in &expected {
        if claimed.get(id).copied().unwrap_or(0) < *n {
            return reject(RejectKind::UncoveredGap, "a disclosed matching object is missing from the results");
        }
    }
    Ok(())
}
