//! Opaque set elements and finite multisets over them.

use std::collections::btree_map::{self, BTreeMap};
use std::fmt;
use std::sync::Arc;

use crate::codec::{DecodeError, Reader, Writer};

/// An accumulator element identified by its canonical byte string.
///
/// Callers are responsible for making the byte encoding injective across the
/// kinds of values they accumulate (the transform layer tags every element).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Element(Arc<[u8]>);

impl Element {
    pub fn new(bytes: impl AsRef<[u8]>) -> Self {
        Element(Arc::from(bytes.as_ref()))
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Debug for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match std::str::from_utf8(&self.0[1.min(self.0.len())..]) {
            Ok(s) if !self.0.is_empty() => write!(f, "{}:{}", self.0[0], s),
            _ => write!(f, "0x{}", hex::encode(&self.0)),
        }
    }
}

/// A finite multiset of elements with positive multiplicities.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Multiset {
    items: BTreeMap<Element, u32>,
    total: u64,
}

impl Multiset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, e: Element) {
        self.insert_n(e, 1);
    }

    pub fn insert_n(&mut self, e: Element, n: u32) {
        if n == 0 {
            return;
        }
        *self.items.entry(e).or_insert(0) += n;
        self.total += n as u64;
    }

    /// Total cardinality counting multiplicities.
    pub fn len(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Number of distinct elements.
    pub fn support_len(&self) -> usize {
        self.items.len()
    }

    pub fn multiplicity(&self, e: &Element) -> u32 {
        self.items.get(e).copied().unwrap_or(0)
    }

    pub fn contains(&self, e: &Element) -> bool {
        self.items.contains_key(e)
    }

    /// Iterates distinct elements with their multiplicities in byte order.
    pub fn iter(&self) -> btree_map::Iter<'_, Element, u32> {
        self.items.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &Element> {
        self.items.keys()
    }

    /// Multiset sum: multiplicities add.
    pub fn sum(&self, other: &Multiset) -> Multiset {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn add_assign(&mut self, other: &Multiset) {
        for (e, n) in other.iter() {
            self.insert_n(e.clone(), *n);
        }
    }

    /// Whether the supports share no element.
    pub fn is_disjoint(&self, other: &Multiset) -> bool {
        let (small, large) = if self.items.len() <= other.items.len() {
            (self, other)
        } else {
            (other, self)
        };
        small.items.keys().all(|e| !large.items.contains_key(e))
    }

    /// Jaccard similarity of the two supports, defined as 1 for two empty sets.
    pub fn jaccard(&self, other: &Multiset) -> f64 {
        let inter = self.items.keys().filter(|e| other.items.contains_key(*e)).count();
        let union = self.items.len() + other.items.len() - inter;
        if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        }
    }

    pub fn encode(&self, w: &mut Writer) {
        w.len_prefix(self.items.len());
        for (e, n) in &self.items {
            w.bytes(e.as_bytes());
            w.u32(*n);
        }
    }

    pub fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let n = r.count(8, "multiset size")?;
        let mut m = Multiset::new();
        let mut prev: Option<Element> = None;
        for _ in 0..n {
            let e = Element::new(r.bytes("multiset element")?);
            let k = r.u32("multiplicity")?;
            if k == 0 || prev.as_ref().is_some_and(|p| *p >= e) {
                return Err(DecodeError::Invalid("multiset entry"));
            }
            prev = Some(e.clone());
            m.insert_n(e, k);
        }
        Ok(m)
    }
}

impl fmt::Debug for Multiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.items.iter()).finish()
    }
}

impl FromIterator<Element> for Multiset {
    fn from_iter<T: IntoIterator<Item = Element>>(iter: T) -> Self {
        let mut m = Multiset::new();
        for e in iter {
            m.insert(e);
        }
        m
    }
}

impl<'a> Extend<&'a Multiset> for Multiset {
    fn extend<T: IntoIterator<Item = &'a Multiset>>(&mut self, iter: T) {
        for m in iter {
            self.add_assign(m);
        }
    }
}
