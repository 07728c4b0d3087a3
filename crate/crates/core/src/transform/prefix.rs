//! Binary prefixes of fixed-width integers and canonical range covers.

use std::fmt;

use super::TransformError;
use crate::acc::Element;

/// Largest supported bit width for one numeric dimension.
pub const MAX_WIDTH: u8 = 63;

/// A node of the implicit complete binary tree over `[0, 2^width)`: the first
/// `len` bits of a `width`-bit value, tagged with its dimension.
///
/// `len = 0` is the root, which covers the whole domain and only appears as
/// the cover of a full-domain range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PrefixElement {
    pub dim: u8,
    pub width: u8,
    pub len: u8,
    pub bits: u64,
}

impl PrefixElement {
    pub fn new(dim: u8, width: u8, len: u8, bits: u64) -> Result<Self, TransformError> {
        check_width(width)?;
        if len > width || (len < 64 && bits >> len != 0) {
            return Err(TransformError::InvalidPrefix);
        }
        Ok(PrefixElement { dim, width, len, bits })
    }

    /// Whether the prefix has unspecified trailing bits.
    pub fn wildcard(&self) -> bool {
        self.len < self.width
    }

    /// The inclusive interval of values below this node.
    pub fn interval(&self) -> (u64, u64) {
        let free = (self.width - self.len) as u32;
        let lo = self.bits << free;
        (lo, lo + ((1u64 << free) - 1))
    }

    pub fn contains(&self, v: u64) -> bool {
        let (lo, hi) = self.interval();
        lo <= v && v <= hi
    }

    /// The bit string with a trailing `*` when wildcarded, e.g. `10*`.
    pub fn bit_string(&self) -> String {
        let mut s: String = (0..self.len)
            .rev()
            .map(|i| if (self.bits >> i) & 1 == 1 { '1' } else { '0' })
            .collect();
        if self.wildcard() {
            s.push('*');
        }
        s
    }

    /// Canonical element bytes: the dimension tag `dim + 1`, then the bit
    /// string. Keyword elements use tag `0`, so encodings never collide.
    pub fn to_element(&self) -> Element {
        let mut b = Vec::with_capacity(2 + self.len as usize);
        b.push(self.dim + 1);
        b.extend_from_slice(self.bit_string().as_bytes());
        Element::new(b)
    }
}

impl fmt::Display for PrefixElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.bit_string(), self.dim + 1)
    }
}

pub(crate) fn check_width(width: u8) -> Result<(), TransformError> {
    if width == 0 || width > MAX_WIDTH {
        return Err(TransformError::InvalidWidth(width));
    }
    Ok(())
}

pub(crate) fn max_value(width: u8) -> u64 {
    (1u64 << width) - 1
}

/// The `width` prefixes of `v` (lengths `1..=width`), shortest first.
pub fn trans_value(v: u64, width: u8, dim: u8) -> Result<Vec<PrefixElement>, TransformError> {
    check_width(width)?;
    if v > max_value(width) {
        return Err(TransformError::ValueOutOfRange { value: v, width });
    }
    Ok((1..=width)
        .map(|len| PrefixElement { dim, width, len, bits: v >> (width - len) })
        .collect())
}

/// The unique minimal set of tree nodes whose intervals exactly tile
/// `[alpha, beta]`, in increasing order of interval.
pub fn range_cover(alpha: u64, beta: u64, width: u8, dim: u8) -> Result<Vec<PrefixElement>, TransformError> {
    check_width(width)?;
    if alpha > beta {
        return Err(TransformError::InvertedRange { lo: alpha, hi: beta });
    }
    if beta > max_value(width) {
        return Err(TransformError::ValueOutOfRange { value: beta, width });
    }
    let mut out = Vec::new();
    let mut lo = alpha;
    loop {
        // Largest aligned block starting at `lo` that stays within `beta`.
        let mut free = if lo == 0 { width as u32 } else { lo.trailing_zeros().min(width as u32) };
        while free > 0 && lo + ((1u64 << free) - 1) > beta {
            free -= 1;
        }
        let len = width - free as u8;
        out.push(PrefixElement { dim, width, len, bits: lo >> free });
        let hi = lo + ((1u64 << free) - 1);
        if hi >= beta {
            break;
        }
        lo = hi + 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(v: &[PrefixElement]) -> Vec<String> {
        v.iter().map(|p| p.bit_string()).collect()
    }

    #[test]
    fn trans_of_four() {
        assert_eq!(strings(&trans_value(4, 3, 0).unwrap()), ["1*", "10*", "100"]);
        assert_eq!(strings(&trans_value(2, 3, 1).unwrap()), ["0*", "01*", "010"]);
        assert_eq!(strings(&trans_value(0, 1, 0).unwrap()), ["0"]);
        assert!(trans_value(8, 3, 0).is_err());
    }

    #[test]
    fn cover_zero_to_six() {
        assert_eq!(strings(&range_cover(0, 6, 3, 0).unwrap()), ["0*", "10*", "110"]);
        assert_eq!(strings(&range_cover(3, 4, 3, 1).unwrap()), ["011", "100"]);
        let root = range_cover(0, 7, 3, 0).unwrap();
        assert_eq!(root.len(), 1);
        assert_eq!(root[0].len, 0);
        assert_eq!(root[0].bit_string(), "*");
        assert!(range_cover(5, 3, 3, 0).is_err());
        assert!(range_cover(0, 8, 3, 0).is_err());
    }

    #[test]
    fn element_tags_separate_dimensions() {
        let a = trans_value(4, 3, 0).unwrap()[0].to_element();
        let b = trans_value(4, 3, 1).unwrap()[0].to_element();
        assert_ne!(a, b);
        assert_eq!(a.as_bytes(), b"\x011*");
    }

    #[test]
    fn wide_domain_cover() {
        let c = range_cover(1, u32::MAX as u64 - 1, 32, 0).unwrap();
        assert_eq!(c.len(), 62);
        assert_eq!(range_cover(0, (1u64 << 63) - 1, 63, 0).unwrap().len(), 1);
    }

    proptest::proptest! {
        #[test]
        fn cover_is_exact_and_small(width in 2u8..=63, a in proptest::num::u64::ANY, b in proptest::num::u64::ANY, v in proptest::num::u64::ANY) {
            let m = max_value(width);
            let (lo, hi) = if a % (m + 1) <= b % (m + 1) { (a % (m + 1), b % (m + 1)) } else { (b % (m + 1), a % (m + 1)) };
            let v = v % (m + 1);
            let cover = range_cover(lo, hi, width, 0).unwrap();
            proptest::prop_assert!(cover.len() <= 2 * width as usize - 2 || (lo == 0 && hi == m));
            let tiles: Vec<(u64, u64)> = cover.iter().map(|p| p.interval()).collect();
            proptest::prop_assert_eq!(tiles[0].0, lo);
            proptest::prop_assert_eq!(tiles[tiles.len() - 1].1, hi);
            proptest::prop_assert!(tiles.windows(2).all(|w| w[0].1 + 1 == w[1].0));
            let hit = trans_value(v, width, 0).unwrap().iter().any(|p| cover.contains(p));
            proptest::prop_assert_eq!(hit || cover[0].len == 0, lo <= v && v <= hi);
        }
    }
}
