//! Inverted prefix tree over subscription queries.
//!
//! Each node is a grid cell of the numeric space, expressed as one prefix
//! element per dimension. Its range inverted file records every query that
//! intersects the cell together with the cover type, and its Boolean
//! inverted file maps each keyword clause of a fully covering query to the
//! queries that carry it. A cell splits into `2^d` equal children whenever
//! it holds a partially covering query and the depth limit allows.

use std::collections::{BTreeMap, BTreeSet};

use crate::acc::Element;
use crate::transform::{transform_query, Clause, CnfCondition, PrefixElement, Query, Schema, KEYWORD_TAG};

use super::SubscribeError;

/// Identifier handed out at registration.
pub type QueryId = u64;

/// Default depth limit of the tree.
pub const DEFAULT_MAX_DEPTH: u8 = 8;

/// How a query's numeric range relates to a cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Cover {
    Full,
    Partial,
}

/// A registered query with its transformed condition and numeric box.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subscription {
    pub query: Query,
    pub cond: CnfCondition,
    /// Inclusive bounds per dimension, clamped to the domain.
    pub bounds: Vec<(u64, u64)>,
}

impl Subscription {
    pub fn new(query: Query, schema: &Schema) -> Result<Self, SubscribeError> {
        if query.window.is_some() {
            return Err(SubscribeError::Window);
        }
        let cond = transform_query(&query, schema)?;
        let bounds = schema
            .dims
            .iter()
            .enumerate()
            .map(|(j, d)| {
                let max = d.max_value();
                match query.ranges.get(j).copied().flatten() {
                    Some((lo, hi)) => (lo, hi.min(max)),
                    None => (0, max),
                }
            })
            .collect();
        Ok(Subscription { query, cond, bounds })
    }

    /// Keyword clauses of the condition, in condition order.
    pub fn keyword_clauses(&self) -> impl Iterator<Item = &Clause> {
        self.cond.clauses.iter().filter(|c| is_keyword_clause(c))
    }

    fn cover(&self, cell: &[PrefixElement]) -> Option<Cover> {
        let mut full = true;
        for (p, (lo, hi)) in cell.iter().zip(&self.bounds) {
            let (a, b) = p.interval();
            if b < *lo || a > *hi {
                return None;
            }
            full &= *lo <= a && b <= *hi;
        }
        Some(if full { Cover::Full } else { Cover::Partial })
    }
}

/// Whether a clause consists of keyword elements.
pub fn is_keyword_clause(c: &Clause) -> bool {
    c.elements().next().is_some_and(|e| e.as_bytes().first() == Some(&KEYWORD_TAG))
}

/// One grid cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IpNode {
    pub depth: u8,
    /// The cell as one prefix per dimension, each of length `depth`.
    pub cell: Vec<PrefixElement>,
    pub rcif: BTreeMap<QueryId, Cover>,
    pub bcif: BTreeMap<Clause, BTreeSet<QueryId>>,
    pub children: Vec<IpNode>,
    elements: Vec<Element>,
}

impl IpNode {
    fn new(cell: Vec<PrefixElement>, depth: u8) -> Self {
        let elements = cell.iter().map(|p| p.to_element()).collect();
        IpNode { depth, cell, rcif: BTreeMap::new(), bcif: BTreeMap::new(), children: Vec::new(), elements }
    }

    fn root(schema: &Schema) -> Self {
        let cell = schema
            .dims
            .iter()
            .enumerate()
            .map(|(j, d)| PrefixElement::new(j as u8, d.width, 0, 0).expect("validated schema"))
            .collect();
        IpNode::new(cell, 0)
    }

    /// The cell as grid prefix elements, one per dimension.
    pub fn cell_elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn partial_queries(&self) -> impl Iterator<Item = QueryId> + '_ {
        self.rcif.iter().filter(|(_, c)| **c == Cover::Partial).map(|(q, _)| *q)
    }

    pub fn full_queries(&self) -> impl Iterator<Item = QueryId> + '_ {
        self.rcif.iter().filter(|(_, c)| **c == Cover::Full).map(|(q, _)| *q)
    }

    fn split(&self) -> Vec<IpNode> {
        let d = self.cell.len();
        (0..1usize << d)
            .map(|c| {
                let cell = self
                    .cell
                    .iter()
                    .enumerate()
                    .map(|(j, p)| {
                        let bit = ((c >> (d - 1 - j)) & 1) as u64;
                        PrefixElement::new(p.dim, p.width, p.len + 1, (p.bits << 1) | bit).expect("depth below width")
                    })
                    .collect();
                IpNode::new(cell, self.depth + 1)
            })
            .collect()
    }

    fn add(&mut self, id: QueryId, sub: &Subscription) -> Option<Cover> {
        let cover = sub.cover(&self.cell)?;
        self.rcif.insert(id, cover);
        if cover == Cover::Full {
            for c in sub.keyword_clauses() {
                self.bcif.entry(c.clone()).or_default().insert(id);
            }
        }
        Some(cover)
    }

    fn populate(&mut self, ids: &[QueryId], subs: &BTreeMap<QueryId, Subscription>, max_depth: u8) {
        for id in ids {
            self.add(*id, &subs[id]);
        }
        self.maybe_split(subs, max_depth);
    }

    fn maybe_split(&mut self, subs: &BTreeMap<QueryId, Subscription>, max_depth: u8) {
        let partial: Vec<QueryId> = self.partial_queries().collect();
        if partial.is_empty() || self.depth >= max_depth || !self.children.is_empty() {
            return;
        }
        self.children = self.split();
        for child in &mut self.children {
            child.populate(&partial, subs, max_depth);
        }
    }

    fn insert(&mut self, id: QueryId, subs: &BTreeMap<QueryId, Subscription>, max_depth: u8) {
        if self.add(id, &subs[&id]) != Some(Cover::Partial) {
            return;
        }
        if self.children.is_empty() {
            self.maybe_split(subs, max_depth);
        } else {
            for child in &mut self.children {
                child.insert(id, subs, max_depth);
            }
        }
    }

    fn remove(&mut self, id: QueryId) {
        if self.rcif.remove(&id).is_none() {
            return;
        }
        self.bcif.retain(|_, qs| {
            qs.remove(&id);
            !qs.is_empty()
        });
        for child in &mut self.children {
            child.remove(id);
        }
        if self.partial_queries().next().is_none() {
            self.children.clear();
        }
    }

    fn visit<'a>(&'a self, f: &mut impl FnMut(&'a IpNode)) {
        f(self);
        for c in &self.children {
            c.visit(f);
        }
    }
}

/// The inverted prefix tree together with the live subscriptions.
#[derive(Clone, Debug, PartialEq)]
pub struct IpTree {
    schema: Schema,
    max_depth: u8,
    root: IpNode,
    subs: BTreeMap<QueryId, Subscription>,
}

impl IpTree {
    /// An empty tree. The depth limit is capped by the narrowest dimension.
    pub fn new(schema: &Schema, max_depth: u8) -> Self {
        let cap = schema.dims.iter().map(|d| d.width).min().unwrap_or(0);
        IpTree { schema: schema.clone(), max_depth: max_depth.min(cap), root: IpNode::root(schema), subs: BTreeMap::new() }
    }

    /// Builds the tree top-down over `subs`.
    pub fn build(schema: &Schema, max_depth: u8, subs: impl IntoIterator<Item = (QueryId, Subscription)>) -> Self {
        let mut t = IpTree::new(schema, max_depth);
        t.subs = subs.into_iter().collect();
        let ids: Vec<QueryId> = t.subs.keys().copied().collect();
        t.root.populate(&ids, &t.subs, t.max_depth);
        t
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn max_depth(&self) -> u8 {
        self.max_depth
    }

    pub fn root(&self) -> &IpNode {
        &self.root
    }

    pub fn subscription(&self, id: QueryId) -> Option<&Subscription> {
        self.subs.get(&id)
    }

    pub fn subscriptions(&self) -> &BTreeMap<QueryId, Subscription> {
        &self.subs
    }

    pub fn len(&self) -> usize {
        self.subs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subs.is_empty()
    }

    /// Adds a subscription under `id`, splitting cells as needed.
    pub fn register(&mut self, id: QueryId, sub: Subscription) {
        if self.subs.contains_key(&id) {
            self.root.remove(id);
        }
        self.subs.insert(id, sub);
        self.root.insert(id, &self.subs, self.max_depth);
    }

    /// Removes a subscription and merges cells that no longer need children.
    pub fn deregister(&mut self, id: QueryId) -> Result<Subscription, SubscribeError> {
        let sub = self.subs.remove(&id).ok_or(SubscribeError::NotFound(id))?;
        self.root.remove(id);
        Ok(sub)
    }

    /// Every node, parents before children.
    pub fn nodes(&self) -> Vec<&IpNode> {
        let mut out = Vec::new();
        self.root.visit(&mut |n| out.push(n));
        out
    }

    /// The node whose cell is given by per-dimension `(len, bits)` prefixes.
    pub fn find(&self, cell: &[(u8, u64)]) -> Option<&IpNode> {
        let depth = cell.first().map_or(0, |c| c.0);
        let mut n = &self.root;
        while n.depth < depth {
            n = n.children.iter().find(|c| {
                c.cell.iter().zip(cell).all(|(p, (len, bits))| p.bits == bits >> (len - c.depth))
            })?;
        }
        n.cell.iter().zip(cell).all(|(p, (len, bits))| p.len == *len && p.bits == *bits).then_some(n)
    }
}
