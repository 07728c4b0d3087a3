//! Subscription queries: continuous queries answered on every new block.
//!
//! In real-time mode each block yields one delivery per subscription, and
//! subscriptions are indexed by an inverted prefix tree so that a proof over
//! a block node is computed once per clause and shared by every query that
//! needs it. In lazy mode (aggregating constructions only) mismatch
//! evidence is buffered and folded along skip lists until the next match.

mod iptree;
mod lazy;
mod process;

use std::collections::{BTreeMap, VecDeque};
use std::sync::{Mutex, RwLock};

use serde::Serialize;
use thiserror::Error;

pub use iptree::{is_keyword_clause, Cover, IpNode, IpTree, QueryId, Subscription, DEFAULT_MAX_DEPTH};
pub use lazy::{process_block_lazy, LazyState, DEFAULT_LAZY_THRESHOLD};
pub use process::{answer_block, process_block_ip, BlockAnswer, ProofCache};

use crate::acc::{AccError, Accumulator, Construction};
use crate::chain::{Block, TemporalObject};
use crate::codec::{DecodeError, Reader, Writer};
use crate::query::VerificationObject;
use crate::transform::{parse_query, Query, Schema, TransformError};

/// Errors raised by subscription processing.
#[derive(Debug, Error)]
pub enum SubscribeError {
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Acc(#[from] AccError),
    #[error("lazy authentication needs an aggregating construction, not {0}")]
    Unsupported(Construction),
    #[error("no subscription with id {0}")]
    NotFound(QueryId),
    #[error("subscriptions take no time window")]
    Window,
    #[error("block {0} has no intra-block index")]
    NoIndex(u64),
}

/// One message to a subscriber: results and VO covering `span` (inclusive
/// block heights).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Delivery {
    pub query: QueryId,
    pub span: (u64, u64),
    pub results: Vec<TemporalObject>,
    pub vo: VerificationObject,
}

const DELIVERY_MAGIC: &[u8] = b"VQSD";
const DELIVERY_VERSION: u8 = 1;

impl Delivery {
    /// `"VQSD"`, version byte, query id, span bounds, results, then the VO
    /// bytes with a length prefix.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.raw(DELIVERY_MAGIC);
        w.u8(DELIVERY_VERSION);
        w.u64(self.query);
        w.u64(self.span.0);
        w.u64(self.span.1);
        w.len_prefix(self.results.len());
        for o in &self.results {
            o.encode(&mut w);
        }
        w.bytes(&self.vo.to_bytes());
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        r.expect_magic(DELIVERY_MAGIC)?;
        let v = r.u8("version")?;
        if v != DELIVERY_VERSION {
            return Err(DecodeError::Version(v));
        }
        let query = r.u64("query id")?;
        let span = (r.u64("span start")?, r.u64("span end")?);
        let n = r.count(12, "result count")?;
        let results = (0..n).map(|_| TemporalObject::decode(&mut r)).collect::<Result<_, _>>()?;
        let vo = VerificationObject::from_bytes(r.bytes("vo")?)?;
        r.finish()?;
        Ok(Delivery { query, span, results, vo })
    }
}

/// How deliveries are produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SubscriptionMode {
    /// One delivery per block and subscription.
    Realtime,
    /// Deliver on a match or after `threshold` buffered blocks.
    Lazy { threshold: u64 },
}

impl SubscriptionMode {
    pub fn lazy() -> Self {
        SubscriptionMode::Lazy { threshold: DEFAULT_LAZY_THRESHOLD }
    }
}

/// Proof-sharing counters accumulated over processed blocks.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SubscriptionStats {
    pub blocks: u64,
    pub deliveries: u64,
    /// `prove_disjoint` invocations.
    pub proofs_generated: u64,
    /// Proofs placed in VOs, counting shared ones once per use.
    pub proofs_used: u64,
    /// Sum over blocks of distinct `(intra node, clause)` pairs proven.
    pub distinct_pairs: u64,
    pub skip_merges: u64,
}

#[derive(Default)]
struct Queues {
    outbox: BTreeMap<QueryId, VecDeque<Delivery>>,
    lazy: BTreeMap<QueryId, LazyState>,
    stats: SubscriptionStats,
    next_id: QueryId,
    tip: u64,
}

/// Subscription front end: registration, block processing and polling.
///
/// Registration takes the tree's write lock; block processing reads a
/// snapshot of it.
pub struct SubscriptionService {
    acc: Accumulator,
    schema: Schema,
    mode: SubscriptionMode,
    tree: RwLock<IpTree>,
    state: Mutex<Queues>,
}

impl SubscriptionService {
    pub fn new(acc: Accumulator, schema: Schema, mode: SubscriptionMode) -> Result<Self, SubscribeError> {
        if matches!(mode, SubscriptionMode::Lazy { .. }) && !acc.construction().supports_aggregation() {
            return Err(SubscribeError::Unsupported(acc.construction()));
        }
        let tree = RwLock::new(IpTree::new(&schema, DEFAULT_MAX_DEPTH));
        Ok(SubscriptionService { acc, schema, mode, tree, state: Mutex::new(Queues { next_id: 1, ..Queues::default() }) })
    }

    pub fn mode(&self) -> SubscriptionMode {
        self.mode
    }

    /// Registers a query given in the textual syntax (without a window).
    pub fn register(&self, text: &str) -> Result<QueryId, SubscribeError> {
        self.register_query(parse_query(text, &self.schema)?)
    }

    pub fn register_query(&self, q: Query) -> Result<QueryId, SubscribeError> {
        let sub = Subscription::new(q, &self.schema)?;
        let mut tree = self.tree.write().expect("tree lock");
        let mut st = self.state.lock().expect("state lock");
        let id = st.next_id;
        st.next_id += 1;
        st.outbox.insert(id, VecDeque::new());
        if matches!(self.mode, SubscriptionMode::Lazy { .. }) {
            st.lazy.insert(id, LazyState::default());
        }
        tree.register(id, sub);
        Ok(id)
    }

    /// Removes a subscription; undelivered messages are dropped.
    pub fn deregister(&self, id: QueryId) -> Result<(), SubscribeError> {
        let mut tree = self.tree.write().expect("tree lock");
        tree.deregister(id)?;
        let mut st = self.state.lock().expect("state lock");
        st.outbox.remove(&id);
        st.lazy.remove(&id);
        Ok(())
    }

    pub fn query(&self, id: QueryId) -> Option<Query> {
        self.tree.read().expect("tree lock").subscription(id).map(|s| s.query.clone())
    }

    /// Processes a newly appended data block.
    pub fn on_block(&self, block: &Block) -> Result<(), SubscribeError> {
        let tree = self.tree.read().expect("tree lock");
        let mut st = self.state.lock().expect("state lock");
        let mut cache = ProofCache::new(&self.acc);
        let c = self.acc.construction();
        let mut out: Vec<Delivery> = Vec::new();
        match self.mode {
            SubscriptionMode::Realtime => {
                if !tree.is_empty() {
                    for (id, ans) in process_block_ip(&tree, block, &mut cache)? {
                        out.push(ans.into_delivery(id, block.height, c));
                    }
                }
            }
            SubscriptionMode::Lazy { threshold } => {
                let Queues { lazy, stats, .. } = &mut *st;
                for (id, state) in lazy.iter_mut() {
                    let before = state.merges;
                    let cond = &tree.subscription(*id).expect("registered").cond;
                    if let Some(d) = process_block_lazy(state, block, *id, cond, &mut cache, threshold)? {
                        out.push(d);
                    }
                    stats.skip_merges += state.merges - before;
                }
            }
        }
        st.stats.blocks += 1;
        st.stats.proofs_generated += cache.generated;
        st.stats.proofs_used += cache.requests;
        st.stats.distinct_pairs += cache.distinct() as u64;
        st.tip = block.height;
        self.deliver(&mut st, out);
        Ok(())
    }

    /// Forces lazy buffers out, e.g. when the stream ends.
    pub fn flush(&self) {
        let mut st = self.state.lock().expect("state lock");
        let tip = st.tip;
        let c = self.acc.construction();
        let out: Vec<Delivery> = st.lazy.iter_mut().filter_map(|(id, s)| s.flush(*id, tip, c)).collect();
        self.deliver(&mut st, out);
    }

    fn deliver(&self, st: &mut Queues, out: Vec<Delivery>) {
        for d in out {
            st.stats.deliveries += 1;
            if let Some(q) = st.outbox.get_mut(&d.query) {
                q.push_back(d);
            }
        }
    }

    /// Takes all pending deliveries of `id`, oldest first.
    pub fn poll(&self, id: QueryId) -> Result<Vec<Delivery>, SubscribeError> {
        let mut st = self.state.lock().expect("state lock");
        let q = st.outbox.get_mut(&id).ok_or(SubscribeError::NotFound(id))?;
        Ok(q.drain(..).collect())
    }

    pub fn stats(&self) -> SubscriptionStats {
        self.state.lock().expect("state lock").stats.clone()
    }

    /// A snapshot of the subscription index.
    pub fn tree(&self) -> IpTree {
        self.tree.read().expect("tree lock").clone()
    }
}
