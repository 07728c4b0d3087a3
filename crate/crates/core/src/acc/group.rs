//! Curve helpers: fixed-base tables, small-coefficient linear combinations,
//! multi-scalar multiplication and product-of-pairings checks.

use std::collections::BTreeMap;

use blstrs::{Bls12, G1Affine, G1Projective, G2Affine, G2Prepared, G2Projective, Scalar};
use group::{Curve, Group};
use pairing::{MillerLoopResult, MultiMillerLoop};

/// Below this many terms an MSM is computed term by term.
const MSM_THRESHOLD: usize = 4;

/// Precomputed multiples `b * 256^j * base` for fast fixed-base scalar
/// multiplication with 8-bit windows.
pub struct FixedBase<G: Group> {
    windows: Vec<[G; 256]>,
}

impl<G: Group> FixedBase<G> {
    pub fn new(base: G) -> Self {
        let mut windows = Vec::with_capacity(32);
        let mut b = base;
        for _ in 0..32 {
            let mut row = [G::identity(); 256];
            for k in 1..256 {
                row[k] = row[k - 1] + b;
            }
            b = row[255] + b;
            windows.push(row);
        }
        FixedBase { windows }
    }

    pub fn mul(&self, s: &Scalar) -> G {
        let bytes = s.to_bytes_le();
        let mut acc = G::identity();
        for (row, byte) in self.windows.iter().zip(bytes.iter()) {
            if *byte != 0 {
                acc += row[*byte as usize];
            }
        }
        acc
    }
}

/// Multiplies by a small integer with double-and-add.
pub fn mul_u64<G: Group>(p: &G, mut k: u64) -> G {
    let mut acc = G::identity();
    let mut base = *p;
    while k != 0 {
        if k & 1 == 1 {
            acc += base;
        }
        base = base.double();
        k >>= 1;
    }
    acc
}

/// Computes `sum k_i * P_i` for small nonnegative `k_i` by first adding all
/// points that share a coefficient.
pub fn small_combination<'a, G: Group + 'a>(terms: impl IntoIterator<Item = (&'a G, u64)>) -> G {
    let mut buckets: BTreeMap<u64, G> = BTreeMap::new();
    for (p, k) in terms {
        if k != 0 {
            *buckets.entry(k).or_insert_with(G::identity) += p;
        }
    }
    buckets.iter().fold(G::identity(), |acc, (k, p)| acc + mul_u64(p, *k))
}

pub fn msm_g1(points: &[G1Projective], scalars: &[Scalar]) -> G1Projective {
    debug_assert_eq!(points.len(), scalars.len());
    if points.len() < MSM_THRESHOLD {
        return points.iter().zip(scalars).map(|(p, s)| p * s).sum();
    }
    G1Projective::multi_exp(points, scalars)
}

pub fn msm_g2(points: &[G2Projective], scalars: &[Scalar]) -> G2Projective {
    debug_assert_eq!(points.len(), scalars.len());
    if points.len() < MSM_THRESHOLD {
        return points.iter().zip(scalars).map(|(p, s)| p * s).sum();
    }
    G2Projective::multi_exp(points, scalars)
}

/// Returns whether `prod e(P_i, Q_i)` is the identity of the target group.
pub fn pairing_product_is_one(terms: &[(G1Projective, G2Projective)]) -> bool {
    let g1: Vec<G1Affine> = terms.iter().map(|(p, _)| p.to_affine()).collect();
    let g2: Vec<G2Prepared> = terms.iter().map(|(_, q)| G2Prepared::from(q.to_affine())).collect();
    let refs: Vec<(&G1Affine, &G2Prepared)> = g1.iter().zip(g2.iter()).collect();
    bool::from(Bls12::multi_miller_loop(&refs).final_exponentiation().is_identity())
}

pub fn g1_to_bytes(p: &G1Projective) -> [u8; 48] {
    p.to_affine().to_compressed()
}

pub fn g2_to_bytes(p: &G2Projective) -> [u8; 96] {
    p.to_affine().to_compressed()
}

pub fn g1_from_bytes(b: &[u8; 48]) -> Option<G1Projective> {
    Option::<G1Affine>::from(G1Affine::from_compressed(b)).map(G1Projective::from)
}

pub fn g2_from_bytes(b: &[u8; 96]) -> Option<G2Projective> {
    Option::<G2Affine>::from(G2Affine::from_compressed(b)).map(G2Projective::from)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ff::Field;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fixed_base_matches_scalar_mul() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t1 = FixedBase::new(G1Projective::generator());
        let t2 = FixedBase::new(G2Projective::generator());
        for _ in 0..8 {
            let s = Scalar::random(&mut rng);
            assert_eq!(t1.mul(&s), G1Projective::generator() * s);
            assert_eq!(t2.mul(&s), G2Projective::generator() * s);
        }
        assert_eq!(t1.mul(&Scalar::ZERO), G1Projective::identity());
    }

    #[test]
    fn small_combination_matches_msm() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts: Vec<G1Projective> = (0..10).map(|_| G1Projective::random(&mut rng)).collect();
        let ks: Vec<u64> = vec![1, 1, 2, 7, 0, 1, 300, 2, 5, 1];
        let expect = msm_g1(&pts, &ks.iter().map(|k| Scalar::from(*k)).collect::<Vec<_>>());
        assert_eq!(small_combination(pts.iter().zip(ks.iter().copied())), expect);
    }

    #[test]
    fn bilinearity_check() {
        let a = Scalar::from(11u64);
        let b = Scalar::from(13u64);
        let g1 = G1Projective::generator();
        let g2 = G2Projective::generator();
        assert!(pairing_product_is_one(&[(g1 * a, g2 * b), (-(g1 * (a * b)), g2)]));
        assert!(!pairing_product_is_one(&[(g1 * a, g2 * b), (-(g1 * a), g2)]));
    }

    #[test]
    fn compression_round_trip() {
        let p = G1Projective::generator() * Scalar::from(99u64);
        assert_eq!(g1_from_bytes(&g1_to_bytes(&p)), Some(p));
        let q = G2Projective::generator() * Scalar::from(98u64);
        assert_eq!(g2_from_bytes(&g2_to_bytes(&q)), Some(q));
        let id = G1Projective::identity();
        assert_eq!(g1_from_bytes(&g1_to_bytes(&id)), Some(id));
    }
}
