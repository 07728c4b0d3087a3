//! Per-block subscription processing with proofs shared across queries.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use crate::acc::{Accumulator, DisjointProof, Multiset};
use crate::chain::{Block, IntraIndex, NodeKind, TemporalObject};
use crate::query::{Evidence, Segment, VerificationObject, VoNode};
use crate::transform::{matches, select_mismatch_clause, Clause, CnfCondition};

use super::iptree::{is_keyword_clause, Cover, IpNode, IpTree, QueryId};
use super::{Delivery, SubscribeError};

/// Disjointness proofs for one block keyed by `(intra node, clause)`, so a
/// proof is computed once however many queries rely on it.
pub struct ProofCache<'a> {
    acc: &'a Accumulator,
    height: u64,
    proofs: HashMap<(u32, Clause), DisjointProof>,
    /// `prove_disjoint` invocations.
    pub generated: u64,
    /// Proof requests, including those answered from the cache.
    pub requests: u64,
}

impl<'a> ProofCache<'a> {
    pub fn new(acc: &'a Accumulator) -> Self {
        ProofCache { acc, height: 0, proofs: HashMap::new(), generated: 0, requests: 0 }
    }

    pub fn accumulator(&self) -> &'a Accumulator {
        self.acc
    }

    /// Switches to another block, dropping proofs of the previous one.
    pub fn start_block(&mut self, height: u64) {
        if height != self.height {
            self.proofs.clear();
            self.height = height;
        }
    }

    /// Distinct `(node, clause)` pairs proven for the current block.
    pub fn distinct(&self) -> usize {
        self.proofs.len()
    }

    pub fn proof(&mut self, node: u32, w: &Multiset, clause: &Clause) -> Result<DisjointProof, SubscribeError> {
        self.requests += 1;
        if let Some(p) = self.proofs.get(&(node, clause.clone())) {
            return Ok(*p);
        }
        let p = self.acc.prove_disjoint(w, &clause.to_multiset())?;
        self.generated += 1;
        self.proofs.insert((node, clause.clone()), p);
        Ok(p)
    }

    fn disjoint(&self, w: &Multiset, clause: &Clause) -> bool {
        self.acc.provably_disjoint(w, &clause.to_multiset())
    }

    fn mismatch_node(&mut self, i: u32, n: &crate::chain::IntraNode, clause: &Clause) -> Result<VoNode, SubscribeError> {
        let proof = self.proof(i, &n.w, clause)?;
        Ok(VoNode::Mismatch { inner: n.inner, digest: n.digest.expect("pruned nodes carry digests"), evidence: Evidence::Single { clause: clause.clone(), proof } })
    }
}

/// One query's answer for one block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockAnswer {
    pub results: Vec<TemporalObject>,
    pub root: VoNode,
}

impl BlockAnswer {
    pub fn into_delivery(self, query: QueryId, height: u64, construction: crate::acc::Construction) -> Delivery {
        let mut vo = VerificationObject::empty(construction);
        vo.segments.push(Segment::Block { height, root: self.root });
        Delivery { query, span: (height, height), results: self.results, vo }
    }
}

fn index(block: &Block) -> Result<&IntraIndex, SubscribeError> {
    block.index.as_ref().ok_or(SubscribeError::NoIndex(block.height))
}

/// Answers one query on one block by traversing its intra-block index,
/// pruning at the first node with a provably mismatching clause.
pub fn answer_block(block: &Block, cond: &CnfCondition, cache: &mut ProofCache<'_>) -> Result<BlockAnswer, SubscribeError> {
    let ix = index(block)?;
    cache.start_block(block.height);
    let mut results = Vec::new();
    let root = answer_node(block, ix, ix.root, cond, cache, &mut results)?;
    Ok(BlockAnswer { results, root })
}

fn select(cache: &ProofCache<'_>, w: &Multiset, cond: &CnfCondition, keep: impl Fn(&Clause) -> bool) -> Option<Clause> {
    select_mismatch_clause(cond, |_, c| keep(c) && cache.disjoint(w, c)).map(|i| cond.clauses[i].clone())
}

fn answer_node(
    block: &Block,
    ix: &IntraIndex,
    i: u32,
    cond: &CnfCondition,
    cache: &mut ProofCache<'_>,
    results: &mut Vec<TemporalObject>,
) -> Result<VoNode, SubscribeError> {
    let n = ix.node(i);
    if n.digest.is_some() {
        if let Some(c) = select(cache, &n.w, cond, |_| true) {
            return cache.mismatch_node(i, n, &c);
        }
    }
    Ok(match n.kind {
        NodeKind::Leaf(oi) => {
            let o = &block.objects[oi as usize];
            if matches(&n.w, cond) {
                results.push(o.clone());
            }
            VoNode::Object { object: o.clone(), digest: n.digest.expect("leaves carry digests") }
        }
        NodeKind::Branch(l, r) => VoNode::Branch {
            digest: n.digest,
            left: Box::new(answer_node(block, ix, l, cond, cache, results)?),
            right: Box::new(answer_node(block, ix, r, cond, cache, results)?),
        },
    })
}

/// Answers every subscription in `tree` on one block with a joint traversal
/// of the block's intra-block index and the tree.
///
/// At each intra node the tree is walked from the root along cells the node
/// may intersect. A fully covering query whose Boolean clause is disjoint
/// from the node's multiset is pruned with a proof shared by every query
/// holding that clause; clauses held by more queries are tried first. A partially covering query that reaches no
/// intersecting child cell is pruned with one of its own range clauses when
/// that clause is provably disjoint. Remaining queries descend; at leaves
/// they are decided individually.
pub fn process_block_ip(tree: &IpTree, block: &Block, cache: &mut ProofCache<'_>) -> Result<BTreeMap<QueryId, BlockAnswer>, SubscribeError> {
    let ix = index(block)?;
    cache.start_block(block.height);
    let active: Vec<QueryId> = tree.subscriptions().keys().copied().collect();
    let mut results: BTreeMap<QueryId, Vec<TemporalObject>> = active.iter().map(|q| (*q, Vec::new())).collect();
    let mut roots = ip_node(tree, block, ix, ix.root, &active, cache, &mut results)?;
    Ok(active
        .iter()
        .map(|q| (*q, BlockAnswer { results: results.remove(q).unwrap(), root: roots.remove(q).unwrap() }))
        .collect())
}

/// Queries the tree proves mismatching for multiset `w`, with their clauses.
fn classify(tree: &IpTree, w: &Multiset, active: &BTreeSet<QueryId>, cache: &ProofCache<'_>) -> BTreeMap<QueryId, Clause> {
    let mut out: BTreeMap<QueryId, Clause> = BTreeMap::new();
    let mut queue: VecDeque<&IpNode> = VecDeque::from([tree.root()]);
    while let Some(ip) = queue.pop_front() {
        let mut entries: Vec<(&Clause, &BTreeSet<QueryId>)> = ip.bcif.iter().collect();
        entries.sort_by_key(|(_, qs)| std::cmp::Reverse(qs.len()));
        for (clause, qs) in entries {
            let pending: Vec<QueryId> = qs.iter().copied().filter(|q| active.contains(q) && !out.contains_key(q)).collect();
            if !pending.is_empty() && cache.disjoint(w, clause) {
                for q in pending {
                    out.insert(q, clause.clone());
                }
            }
        }
        let hit: Vec<&IpNode> = ip.children.iter().filter(|c| c.cell_elements().iter().all(|e| w.contains(e))).collect();
        let reached: BTreeSet<QueryId> = hit.iter().flat_map(|c| c.rcif.keys().copied()).collect();
        for (q, cover) in &ip.rcif {
            if *cover != Cover::Partial || !active.contains(q) || out.contains_key(q) || reached.contains(q) {
                continue;
            }
            let cond = &tree.subscription(*q).expect("registered").cond;
            let clause = if ip.is_leaf() { select(cache, w, cond, |_| true) } else { select(cache, w, cond, |c| !is_keyword_clause(c)) };
            if let Some(c) = clause {
                out.insert(*q, c);
            }
        }
        queue.extend(hit);
    }
    out
}

fn ip_node(
    tree: &IpTree,
    block: &Block,
    ix: &IntraIndex,
    i: u32,
    active: &[QueryId],
    cache: &mut ProofCache<'_>,
    results: &mut BTreeMap<QueryId, Vec<TemporalObject>>,
) -> Result<BTreeMap<QueryId, VoNode>, SubscribeError> {
    let n = ix.node(i);
    let mut out = BTreeMap::new();
    let mismatched = if n.digest.is_some() {
        classify(tree, &n.w, &active.iter().copied().collect(), cache)
    } else {
        BTreeMap::new()
    };
    let mut rest = Vec::new();
    for q in active {
        match mismatched.get(q) {
            Some(c) => {
                out.insert(*q, cache.mismatch_node(i, n, c)?);
            }
            None => rest.push(*q),
        }
    }
    match n.kind {
        NodeKind::Leaf(oi) => {
            let o = &block.objects[oi as usize];
            for q in rest {
                let cond = &tree.subscription(q).expect("registered").cond;
                if matches(&n.w, cond) {
                    results.get_mut(&q).unwrap().push(o.clone());
                } else if let Some(c) = select(cache, &n.w, cond, |_| true) {
                    out.insert(q, cache.mismatch_node(i, n, &c)?);
                    continue;
                }
                out.insert(q, VoNode::Object { object: o.clone(), digest: n.digest.expect("leaves carry digests") });
            }
        }
        NodeKind::Branch(l, r) if !rest.is_empty() => {
            let mut left = ip_node(tree, block, ix, l, &rest, cache, results)?;
            let mut right = ip_node(tree, block, ix, r, &rest, cache, results)?;
            for q in rest {
                let (a, b) = (left.remove(&q).unwrap(), right.remove(&q).unwrap());
                out.insert(q, VoNode::Branch { digest: n.digest, left: Box::new(a), right: Box::new(b) });
            }
        }
        NodeKind::Branch(..) => {}
    }
    Ok(out)
}
