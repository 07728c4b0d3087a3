//! Dense univariate polynomials over the BLS12-381 scalar field.
//!
//! Multiplication switches to a radix-2 number-theoretic transform once both
//! operands are large, and products of many linear factors are built with a
//! balanced product tree.

use blstrs::Scalar;
use ff::{Field, PrimeField};

/// Operand length above which multiplication uses the NTT.
const NTT_THRESHOLD: usize = 64;

/// Polynomial with coefficients stored from the constant term upwards and no
/// trailing zero coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    coeffs: Vec<Scalar>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Poly { coeffs: vec![Scalar::ONE] }
    }

    pub fn from_coeffs(mut coeffs: Vec<Scalar>) -> Self {
        while coeffs.last().is_some_and(|c| bool::from(c.is_zero())) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    /// The monic linear factor `x + r`.
    pub fn linear(r: Scalar) -> Self {
        Poly::from_coeffs(vec![r, Scalar::ONE])
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, with the zero polynomial reported as `None`.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Scalar {
        self.coeffs.last().copied().unwrap_or(Scalar::ZERO)
    }

    pub fn evaluate(&self, x: &Scalar) -> Scalar {
        self.coeffs.iter().rev().fold(Scalar::ZERO, |acc, c| acc * x + c)
    }

    pub fn scale(&self, k: &Scalar) -> Poly {
        Poly::from_coeffs(self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![Scalar::ZERO; n];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i] += c;
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            out[i] += c;
        }
        Poly::from_coeffs(out)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(&-Scalar::ONE))
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        if self.coeffs.len().min(other.coeffs.len()) < NTT_THRESHOLD {
            return self.mul_schoolbook(other);
        }
        Poly::from_coeffs(ntt_mul(&self.coeffs, &other.coeffs))
    }

    fn mul_schoolbook(&self, other: &Poly) -> Poly {
        let mut out = vec![Scalar::ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::from_coeffs(out)
    }

    /// Euclidean division returning `(quotient, remainder)`.
    ///
    /// Panics if `divisor` is zero.
    pub fn div_rem(&self, divisor: &Poly) -> (Poly, Poly) {
        let dd = divisor.degree().expect("division by the zero polynomial");
        let Some(nd) = self.degree() else {
            return (Poly::zero(), Poly::zero());
        };
        if nd < dd {
            return (Poly::zero(), self.clone());
        }
        let inv = divisor.leading().invert().unwrap();
        let mut rem = self.coeffs.clone();
        let mut quot = vec![Scalar::ZERO; nd - dd + 1];
        for i in (0..=nd - dd).rev() {
            let c = rem[i + dd] * inv;
            if bool::from(c.is_zero()) {
                continue;
            }
            quot[i] = c;
            for (j, d) in divisor.coeffs.iter().enumerate() {
                rem[i + j] -= c * d;
            }
        }
        rem.truncate(dd);
        (Poly::from_coeffs(quot), Poly::from_coeffs(rem))
    }

    /// Product of `(x + r)^m` over all `(r, m)` pairs.
    pub fn from_roots(roots: &[(Scalar, u32)]) -> Poly {
        let mut layer: Vec<Poly> = Vec::new();
        for (r, m) in roots {
            for _ in 0..*m {
                layer.push(Poly::linear(*r));
            }
        }
        if layer.is_empty() {
            return Poly::one();
        }
        while layer.len() > 1 {
            let mut next = Vec::with_capacity(layer.len().div_ceil(2));
            let mut it = layer.into_iter();
            while let Some(a) = it.next() {
                match it.next() {
                    Some(b) => next.push(a.mul(&b)),
                    None => next.push(a),
                }
            }
            layer = next;
        }
        layer.pop().unwrap()
    }
}

/// Extended Euclid: returns `(g, u, v)` with `u*a + v*b = g` and `g` monic.
///
/// When `a` and `b` are coprime and nonzero, `g = 1`, `deg u < deg b` and
/// `deg v < deg a`.
pub fn xgcd(a: &Poly, b: &Poly) -> (Poly, Poly, Poly) {
    let (mut r0, mut r1) = (a.clone(), b.clone());
    let (mut s0, mut s1) = (Poly::one(), Poly::zero());
    let (mut t0, mut t1) = (Poly::zero(), Poly::one());
    while !r1.is_zero() {
        let (q, r) = r0.div_rem(&r1);
        let s = s0.sub(&q.mul(&s1));
        let t = t0.sub(&q.mul(&t1));
        r0 = std::mem::replace(&mut r1, r);
        s0 = std::mem::replace(&mut s1, s);
        t0 = std::mem::replace(&mut t1, t);
    }
    if r0.is_zero() {
        return (r0, s0, t0);
    }
    let inv = r0.leading().invert().unwrap();
    (r0.scale(&inv), s0.scale(&inv), t0.scale(&inv))
}

fn ntt_mul(a: &[Scalar], b: &[Scalar]) -> Vec<Scalar> {
    let out_len = a.len() + b.len() - 1;
    let n = out_len.next_power_of_two();
    let log_n = n.trailing_zeros();
    assert!(log_n <= Scalar::S, "product degree exceeds the field's two-adicity");
    let mut omega = Scalar::ROOT_OF_UNITY;
    for _ in log_n..Scalar::S {
        omega = omega.square();
    }
    let mut fa = a.to_vec();
    fa.resize(n, Scalar::ZERO);
    let mut fb = b.to_vec();
    fb.resize(n, Scalar::ZERO);
    ntt(&mut fa, omega);
    ntt(&mut fb, omega);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    ntt(&mut fa, omega.invert().unwrap());
    let n_inv = Scalar::from(n as u64).invert().unwrap();
    fa.truncate(out_len);
    for x in fa.iter_mut() {
        *x *= n_inv;
    }
    fa
}

/// In-place iterative Cooley-Tukey transform of a power-of-two length vector.
fn ntt(v: &mut [Scalar], omega: Scalar) {
    let n = v.len();
    let log_n = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - log_n);
        if i < j {
            v.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let mut w_len = omega;
        for _ in 0..(log_n - len.trailing_zeros()) {
            w_len = w_len.square();
        }
        let half = len / 2;
        let mut twiddles = Vec::with_capacity(half);
        let mut w = Scalar::ONE;
        for _ in 0..half {
            twiddles.push(w);
            w *= w_len;
        }
        for chunk in v.chunks_mut(len) {
            let (lo, hi) = chunk.split_at_mut(half);
            for k in 0..half {
                let t = hi[k] * twiddles[k];
                hi[k] = lo[k] - t;
                lo[k] += t;
            }
        }
        len <<= 1;
    }
}
