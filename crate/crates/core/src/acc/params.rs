//! Public parameters (powers of a secret trapdoor in both source groups) and
//! their generation and serialization.

use std::fmt;

use blstrs::{G1Projective, G2Projective, Scalar};
use ff::Field;
use group::Group;
use rand_chacha::ChaCha20Rng;
use rand_core::SeedableRng;
use serde::{Deserialize, Serialize};

use super::group::{g1_from_bytes, g1_to_bytes, g2_from_bytes, g2_to_bytes, FixedBase};
use super::AccError;
use crate::codec::{DecodeError, Reader, Writer};

const MAGIC: &[u8; 4] = b"VQPP";
const VERSION: u8 = 1;

/// Which accumulator construction a parameter set supports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Construction {
    /// Degree-bounded construction over arbitrary multisets; no aggregation.
    Acc1,
    /// Construction over a bounded element universe with additive aggregation.
    Acc2,
}

impl Construction {
    pub fn tag(self) -> u8 {
        match self {
            Construction::Acc1 => 1,
            Construction::Acc2 => 2,
        }
    }

    pub fn from_tag(t: u8) -> Option<Self> {
        match t {
            1 => Some(Construction::Acc1),
            2 => Some(Construction::Acc2),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Construction::Acc1 => "acc1",
            Construction::Acc2 => "acc2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "acc1" => Some(Construction::Acc1),
            "acc2" => Some(Construction::Acc2),
            _ => None,
        }
    }

    pub fn supports_aggregation(self) -> bool {
        self == Construction::Acc2
    }
}

impl fmt::Display for Construction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The secret exponent behind a parameter set.
///
/// Only returned by key generation, for tests and for deployments that want
/// to destroy it explicitly. Nothing else in the crate uses it.
pub struct Trapdoor(pub(crate) Scalar);

impl Trapdoor {
    pub fn secret(&self) -> Scalar {
        self.0
    }
}

impl fmt::Debug for Trapdoor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Trapdoor(..)")
    }
}

/// Public powers of the trapdoor `s`.
///
/// * `Acc1`: `g1^(s^i)` and `g2^(s^i)` for `i` in `0..=q`.
/// * `Acc2`: `g1^(s^i)` for `i` in `0..=2q-2` except `i = q`, and
///   `g2^(s^i)` for `i` in `0..q`. The missing power at `q` is what makes
///   disjointness proofs unforgeable.
#[derive(Clone)]
pub struct PublicParams {
    construction: Construction,
    capacity: u64,
    g1: Vec<G1Projective>,
    g2: Vec<G2Projective>,
}

impl PartialEq for PublicParams {
    fn eq(&self, other: &Self) -> bool {
        self.construction == other.construction
            && self.capacity == other.capacity
            && self.g1 == other.g1
            && self.g2 == other.g2
    }
}

impl fmt::Debug for PublicParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PublicParams")
            .field("construction", &self.construction)
            .field("capacity", &self.capacity)
            .field("g1_powers", &self.g1.len())
            .field("g2_powers", &self.g2.len())
            .finish()
    }
}

fn lengths(construction: Construction, q: u64) -> (usize, usize) {
    match construction {
        Construction::Acc1 => (q as usize + 1, q as usize + 1),
        Construction::Acc2 => (2 * q as usize - 1, q as usize),
    }
}

/// Generates parameters deterministically from `seed`.
///
/// `q` is the maximum multiset cardinality for `Acc1` and the size of the
/// element universe for `Acc2`; it must be at least 2.
pub fn keygen(construction: Construction, q: u64, seed: u64) -> Result<(PublicParams, Trapdoor), AccError> {
    if !(2..=(1 << 28)).contains(&q) {
        return Err(AccError::InvalidCapacity(q));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let s = loop {
        let s = Scalar::random(&mut rng);
        if !bool::from(s.is_zero()) {
            break s;
        }
    };
    let (n1, n2) = lengths(construction, q);
    let t1 = FixedBase::new(G1Projective::generator());
    let t2 = FixedBase::new(G2Projective::generator());
    let mut g1 = Vec::with_capacity(n1);
    let mut g2 = Vec::with_capacity(n2);
    let mut power = Scalar::ONE;
    for i in 0..n1.max(n2) {
        if i < n1 {
            if construction == Construction::Acc2 && i as u64 == q {
                g1.push(G1Projective::identity());
            } else {
                g1.push(t1.mul(&power));
            }
        }
        if i < n2 {
            g2.push(t2.mul(&power));
        }
        power *= s;
    }
    Ok((PublicParams { construction, capacity: q, g1, g2 }, Trapdoor(s)))
}

impl PublicParams {
    pub fn construction(&self) -> Construction {
        self.construction
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    /// `g1^(s^i)`, or `None` outside the published range (including the
    /// `Acc2` gap).
    pub fn g1_power(&self, i: usize) -> Option<&G1Projective> {
        if self.is_gap(i) {
            return None;
        }
        self.g1.get(i)
    }

    pub fn g2_power(&self, i: usize) -> Option<&G2Projective> {
        self.g2.get(i)
    }

    pub(crate) fn g1_slice(&self, n: usize) -> &[G1Projective] {
        &self.g1[..n]
    }

    pub(crate) fn g2_slice(&self, n: usize) -> &[G2Projective] {
        &self.g2[..n]
    }

    pub fn g1_len(&self) -> usize {
        self.g1.len()
    }

    pub fn g2_len(&self) -> usize {
        self.g2.len()
    }

    fn is_gap(&self, i: usize) -> bool {
        self.construction == Construction::Acc2 && i as u64 == self.capacity
    }

    /// Serializes as magic, version, construction, capacity, then each group
    /// element compressed in index order. Every slot is preceded by a presence
    /// byte, which is zero only for the `Acc2` gap.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.raw(MAGIC);
        w.u8(VERSION);
        w.u8(self.construction.tag());
        w.u64(self.capacity);
        w.u64(self.g1.len() as u64);
        for (i, p) in self.g1.iter().enumerate() {
            if self.is_gap(i) {
                w.u8(0);
            } else {
                w.u8(1);
                w.raw(&g1_to_bytes(p));
            }
        }
        w.u64(self.g2.len() as u64);
        for p in &self.g2 {
            w.u8(1);
            w.raw(&g2_to_bytes(p));
        }
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        r.expect_magic(MAGIC)?;
        let v = r.u8("version")?;
        if v != VERSION {
            return Err(DecodeError::Version(v));
        }
        let construction = Construction::from_tag(r.u8("construction")?).ok_or(DecodeError::Invalid("construction"))?;
        let capacity = r.u64("capacity")?;
        if !(2..=(1 << 28)).contains(&capacity) {
            return Err(DecodeError::Invalid("capacity"));
        }
        let (n1, n2) = lengths(construction, capacity);
        if r.u64("g1 count")? != n1 as u64 {
            return Err(DecodeError::Invalid("g1 count"));
        }
        let mut params = PublicParams { construction, capacity, g1: Vec::with_capacity(n1), g2: Vec::with_capacity(n2) };
        for i in 0..n1 {
            let present = r.u8("presence byte")?;
            match (present, params.is_gap(i)) {
                (0, true) => params.g1.push(G1Projective::identity()),
                (1, false) => {
                    let p = g1_from_bytes(&r.array("g1 element")?).ok_or(DecodeError::Invalid("g1 element"))?;
                    params.g1.push(p);
                }
                _ => return Err(DecodeError::Invalid("gap marker")),
            }
        }
        if r.u64("g2 count")? != n2 as u64 {
            return Err(DecodeError::Invalid("g2 count"));
        }
        for _ in 0..n2 {
            if r.u8("presence byte")? != 1 {
                return Err(DecodeError::Invalid("gap marker"));
            }
            let p = g2_from_bytes(&r.array("g2 element")?).ok_or(DecodeError::Invalid("g2 element"))?;
            params.g2.push(p);
        }
        r.finish()?;
        if params.g1[0] != G1Projective::generator() || params.g2[0] != G2Projective::generator() {
            return Err(DecodeError::Invalid("generator"));
        }
        Ok(params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn powers_follow_trapdoor() {
        let (pp, td) = keygen(Construction::Acc1, 4, 9).unwrap();
        let s = td.secret();
        assert_eq!(pp.g1_len(), 5);
        assert_eq!(*pp.g1_power(3).unwrap(), G1Projective::generator() * (s * s * s));
        assert_eq!(*pp.g2_power(4).unwrap(), G2Projective::generator() * (s * s * s * s));
    }

    #[test]
    fn acc2_gap_is_absent() {
        let (pp, td) = keygen(Construction::Acc2, 5, 9).unwrap();
        assert_eq!(pp.g1_len(), 9);
        assert_eq!(pp.g2_len(), 5);
        assert!(pp.g1_power(5).is_none());
        let s = td.secret();
        let s6 = s * s * s * s * s * s;
        assert_eq!(*pp.g1_power(6).unwrap(), G1Projective::generator() * s6);
        assert!(pp.g1_power(9).is_none());
    }

    #[test]
    fn deterministic_and_serializable() {
        for c in [Construction::Acc1, Construction::Acc2] {
            let (a, _) = keygen(c, 6, 77).unwrap();
            let (b, _) = keygen(c, 6, 77).unwrap();
            assert_eq!(a, b);
            let bytes = a.to_bytes();
            assert_eq!(PublicParams::from_bytes(&bytes).unwrap(), a);
            let mut bad = bytes.clone();
            bad.push(0);
            assert!(PublicParams::from_bytes(&bad).is_err());
        }
        let (a, _) = keygen(Construction::Acc1, 6, 1).unwrap();
        let (b, _) = keygen(Construction::Acc1, 6, 2).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn rejects_degenerate_capacity() {
        assert!(matches!(keygen(Construction::Acc1, 1, 0), Err(AccError::InvalidCapacity(1))));
        assert!(matches!(keygen(Construction::Acc2, 0, 0), Err(AccError::InvalidCapacity(0))));
    }
}
