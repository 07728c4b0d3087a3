//! Bilinear-pairing multiset accumulators with set-disjointness proofs.
//!
//! Two constructions share one interface:
//!
//! * [`Construction::Acc1`] encodes a multiset `X` as `g1^P(s)` where
//!   `P(x) = prod (x + h(e))`. Disjointness is proven with Bezout cofactors of
//!   the two characteristic polynomials.
//! * [`Construction::Acc2`] maps elements into `[1, q-1]` and encodes `X` as a
//!   pair of sums of powers. Digests and proofs aggregate by group addition.
//!
//! Both use the type-3 BLS12-381 pairing; digests live in `G1` (and `G2` for
//! the second half of an `Acc2` digest).

mod element;
mod group;
mod params;
pub mod poly;

use std::collections::BTreeMap;
use std::sync::Arc;

use blstrs::{G1Projective, G2Projective, Scalar};
use ff::Field;
use ::group::Group;
use sha2::{Digest as _, Sha256};
use thiserror::Error;

pub use element::{Element, Multiset};
pub use group::{pairing_product_is_one, FixedBase};
pub use params::{keygen, Construction, PublicParams, Trapdoor};

use crate::codec::{DecodeError, Reader, Writer};
use group::{g1_from_bytes, g1_to_bytes, g2_from_bytes, g2_to_bytes, msm_g1, msm_g2, small_combination};
use poly::{xgcd, Poly};

/// Errors raised by accumulator operations.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AccError {
    #[error("capacity {0} is not supported (must be between 2 and 2^28)")]
    InvalidCapacity(u64),
    #[error("multiset of cardinality {needed} exceeds the parameter capacity {capacity}")]
    CapacityExceeded { needed: u64, capacity: u64 },
    #[error("the multisets are not disjoint")]
    NotDisjoint,
    #[error("operation requires an aggregatable construction; {0} does not support it")]
    Unsupported(Construction),
    #[error("digest or proof belongs to a different construction")]
    ConstructionMismatch,
    #[error("nothing to aggregate")]
    EmptyAggregate,
}

/// An accumulation value (the attribute digest of a multiset).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AccValue {
    Acc1(G1Projective),
    Acc2 { a: G1Projective, b: G2Projective },
}

/// A proof that two accumulated multisets are disjoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DisjointProof {
    Acc1 { f1: G2Projective, f2: G2Projective },
    Acc2(G1Projective),
}

impl AccValue {
    pub fn construction(&self) -> Construction {
        match self {
            AccValue::Acc1(_) => Construction::Acc1,
            AccValue::Acc2 { .. } => Construction::Acc2,
        }
    }

    /// Canonical compressed encoding; this is what node hashes commit to.
    pub fn to_bytes(&self) -> Vec<u8> {
        match self {
            AccValue::Acc1(p) => g1_to_bytes(p).to_vec(),
            AccValue::Acc2 { a, b } => {
                let mut v = g1_to_bytes(a).to_vec();
                v.extend_from_slice(&g2_to_bytes(b));
                v
            }
        }
    }

    pub fn encoded_len(c: Construction) -> usize {
        match c {
            Construction::Acc1 => 48,
            Construction::Acc2 => 144,
        }
    }

    pub fn encode(&self, w: &mut Writer) {
        w.raw(&self.to_bytes());
    }

    pub fn decode(c: Construction, r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let a = g1_from_bytes(&r.array("digest")?).ok_or(DecodeError::Invalid("digest"))?;
        Ok(match c {
            Construction::Acc1 => AccValue::Acc1(a),
            Construction::Acc2 => {
                let b = g2_from_bytes(&r.array("digest")?).ok_or(DecodeError::Invalid("digest"))?;
                AccValue::Acc2 { a, b }
            }
        })
    }
}

impl DisjointProof {
    pub fn construction(&self) -> Construction {
        match self {
            DisjointProof::Acc1 { .. } => Construction::Acc1,
            DisjointProof::Acc2(_) => Construction::Acc2,
        }
    }

    pub fn encoded_len(c: Construction) -> usize {
        match c {
            Construction::Acc1 => 192,
            Construction::Acc2 => 48,
        }
    }

    pub fn encode(&self, w: &mut Writer) {
        match self {
            DisjointProof::Acc1 { f1, f2 } => {
                w.raw(&g2_to_bytes(f1));
                w.raw(&g2_to_bytes(f2));
            }
            DisjointProof::Acc2(p) => w.raw(&g1_to_bytes(p)),
        }
    }

    pub fn decode(c: Construction, r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(match c {
            Construction::Acc1 => {
                let f1 = g2_from_bytes(&r.array("proof")?).ok_or(DecodeError::Invalid("proof"))?;
                let f2 = g2_from_bytes(&r.array("proof")?).ok_or(DecodeError::Invalid("proof"))?;
                DisjointProof::Acc1 { f1, f2 }
            }
            Construction::Acc2 => {
                DisjointProof::Acc2(g1_from_bytes(&r.array("proof")?).ok_or(DecodeError::Invalid("proof"))?)
            }
        })
    }
}

/// An accumulator instance: public parameters plus the per-chain salt used
/// when hashing elements into the field or the `Acc2` universe.
#[derive(Clone, Debug)]
pub struct Accumulator {
    params: Arc<PublicParams>,
    salt: Arc<[u8]>,
}

impl Accumulator {
    pub fn new(params: Arc<PublicParams>, salt: &[u8]) -> Self {
        Accumulator { params, salt: Arc::from(salt) }
    }

    pub fn params(&self) -> &PublicParams {
        &self.params
    }

    pub fn shared_params(&self) -> Arc<PublicParams> {
        self.params.clone()
    }

    pub fn salt(&self) -> &[u8] {
        &self.salt
    }

    pub fn construction(&self) -> Construction {
        self.params.construction()
    }

    fn salted(&self, tag: u8, e: &Element) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update((self.salt.len() as u32).to_le_bytes());
        h.update(&self.salt);
        h.update([tag]);
        h.update(e.as_bytes());
        h.finalize().into()
    }

    /// Field encoding used by `Acc1`: 512 hash bits reduced modulo the group
    /// order.
    pub fn field_encoding(&self, e: &Element) -> Scalar {
        let hi = self.salted(0, e);
        let lo = self.salted(1, e);
        let two64 = Scalar::from(u64::MAX) + Scalar::ONE;
        let mut acc = Scalar::ZERO;
        for chunk in hi.chunks(8).chain(lo.chunks(8)) {
            acc = acc * two64 + Scalar::from(u64::from_be_bytes(chunk.try_into().unwrap()));
        }
        acc
    }

    /// Universe encoding used by `Acc2`: a value in `[1, q-1]`.
    pub fn universe_encoding(&self, e: &Element) -> u64 {
        let m = (self.params.capacity() - 1) as u128;
        let d = self.salted(2, e);
        let r = d.iter().fold(0u128, |acc, b| ((acc << 8) | *b as u128) % m);
        r as u64 + 1
    }

    fn universe_map(&self, x: &Multiset) -> BTreeMap<u64, u64> {
        let mut out = BTreeMap::new();
        for (e, n) in x.iter() {
            *out.entry(self.universe_encoding(e)).or_insert(0) += *n as u64;
        }
        out
    }

    fn check_capacity(&self, x: &Multiset) -> Result<(), AccError> {
        if self.construction() == Construction::Acc1 && x.len() > self.params.capacity() {
            return Err(AccError::CapacityExceeded { needed: x.len(), capacity: self.params.capacity() });
        }
        Ok(())
    }

    fn char_poly(&self, x: &Multiset) -> Poly {
        let roots: Vec<(Scalar, u32)> = x.iter().map(|(e, n)| (self.field_encoding(e), *n)).collect();
        Poly::from_roots(&roots)
    }

    /// Computes the accumulation value of `x`.
    pub fn setup(&self, x: &Multiset) -> Result<AccValue, AccError> {
        self.check_capacity(x)?;
        match self.construction() {
            Construction::Acc1 => {
                let p = self.char_poly(x);
                Ok(AccValue::Acc1(msm_g1(self.params.g1_slice(p.coeffs().len()), p.coeffs())))
            }
            Construction::Acc2 => {
                let q = self.params.capacity() as usize;
                let map = self.universe_map(x);
                let a = small_combination(map.iter().map(|(v, m)| (self.params.g1_power(*v as usize).unwrap(), *m)));
                let b = small_combination(map.iter().map(|(v, m)| (self.params.g2_power(q - *v as usize).unwrap(), *m)));
                Ok(AccValue::Acc2 { a, b })
            }
        }
    }

    /// Whether a disjointness proof for `x1` and `x2` can be produced: the
    /// supports are disjoint and no two elements collide under the encoding.
    pub fn provably_disjoint(&self, x1: &Multiset, x2: &Multiset) -> bool {
        if !x1.is_disjoint(x2) {
            return false;
        }
        match self.construction() {
            // A collision of 512-bit hashes modulo the group order is negligible;
            // proving still detects one through a nontrivial gcd.
            Construction::Acc1 => true,
            Construction::Acc2 => {
                let (small, large) = if x1.support_len() <= x2.support_len() { (x1, x2) } else { (x2, x1) };
                let codes: std::collections::HashSet<u64> =
                    small.support().map(|e| self.universe_encoding(e)).collect();
                large.support().all(|e| !codes.contains(&self.universe_encoding(e)))
            }
        }
    }

    /// Proves that `x1` and `x2` are disjoint.
    pub fn prove_disjoint(&self, x1: &Multiset, x2: &Multiset) -> Result<DisjointProof, AccError> {
        if !x1.is_disjoint(x2) {
            return Err(AccError::NotDisjoint);
        }
        self.check_capacity(x1)?;
        self.check_capacity(x2)?;
        match self.construction() {
            Construction::Acc1 => {
                let p1 = self.char_poly(x1);
                let p2 = self.char_poly(x2);
                let (g, q1, q2) = xgcd(&p1, &p2);
                if g != Poly::one() {
                    return Err(AccError::NotDisjoint);
                }
                let f1 = msm_g2(self.params.g2_slice(q1.coeffs().len()), q1.coeffs());
                let f2 = msm_g2(self.params.g2_slice(q2.coeffs().len()), q2.coeffs());
                Ok(DisjointProof::Acc1 { f1, f2 })
            }
            Construction::Acc2 => {
                let q = self.params.capacity() as usize;
                let a = self.universe_map(x1);
                let b = self.universe_map(x2);
                if a.keys().any(|k| b.contains_key(k)) {
                    return Err(AccError::NotDisjoint);
                }
                let mut coeffs: BTreeMap<usize, u64> = BTreeMap::new();
                for (x, m) in &a {
                    for (y, n) in &b {
                        *coeffs.entry(*x as usize + q - *y as usize).or_insert(0) += m * n;
                    }
                }
                let pi = small_combination(coeffs.iter().map(|(i, k)| (self.params.g1_power(*i).unwrap(), *k)));
                Ok(DisjointProof::Acc2(pi))
            }
        }
    }

    /// Checks a disjointness proof against two accumulation values with one
    /// product-of-pairings evaluation.
    pub fn verify_disjoint(&self, a1: &AccValue, a2: &AccValue, proof: &DisjointProof) -> bool {
        let g1 = G1Projective::generator();
        let g2 = G2Projective::generator();
        match (a1, a2, proof) {
            (AccValue::Acc1(p1), AccValue::Acc1(p2), DisjointProof::Acc1 { f1, f2 })
                if self.construction() == Construction::Acc1 =>
            {
                pairing_product_is_one(&[(*p1, *f1), (*p2, *f2), (-g1, g2)])
            }
            (AccValue::Acc2 { a, .. }, AccValue::Acc2 { b, .. }, DisjointProof::Acc2(pi))
                if self.construction() == Construction::Acc2 =>
            {
                pairing_product_is_one(&[(*a, *b), (-*pi, g2)])
            }
            _ => false,
        }
    }

    /// Aggregates accumulation values: the result equals `setup` of the
    /// multiset sum. Only `Acc2` supports this.
    pub fn sum(&self, values: &[AccValue]) -> Result<AccValue, AccError> {
        if self.construction() != Construction::Acc2 {
            return Err(AccError::Unsupported(self.construction()));
        }
        if values.is_empty() {
            return Err(AccError::EmptyAggregate);
        }
        let mut a = G1Projective::identity();
        let mut b = G2Projective::identity();
        for v in values {
            match v {
                AccValue::Acc2 { a: va, b: vb } => {
                    a += va;
                    b += vb;
                }
                AccValue::Acc1(_) => return Err(AccError::ConstructionMismatch),
            }
        }
        Ok(AccValue::Acc2 { a, b })
    }

    /// Aggregates proofs `pi_i` of `X_i` disjoint from one common set `Y` into a
    /// proof that `sum X_i` is disjoint from `Y`. Callers must only combine
    /// proofs that share the right-hand set. Only `Acc2` supports this.
    pub fn proof_sum(&self, proofs: &[DisjointProof]) -> Result<DisjointProof, AccError> {
        if self.construction() != Construction::Acc2 {
            return Err(AccError::Unsupported(self.construction()));
        }
        if proofs.is_empty() {
            return Err(AccError::EmptyAggregate);
        }
        let mut acc = G1Projective::identity();
        for p in proofs {
            match p {
                DisjointProof::Acc2(pi) => acc += pi,
                DisjointProof::Acc1 { .. } => return Err(AccError::ConstructionMismatch),
            }
        }
        Ok(DisjointProof::Acc2(acc))
    }
}
