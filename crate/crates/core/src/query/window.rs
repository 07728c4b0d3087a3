//! Mapping a time window onto block heights using headers alone.
//!
//! Objects of block `h` have timestamps in `[ts(h-1), ts(h)]` because the
//! miner stamps each block with its largest object timestamp and refuses
//! objects older than the previous block.

use crate::chain::BlockHeader;

/// How a block relates to a query window.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Placement {
    /// No object of the block can fall inside the window.
    Outside,
    /// Some objects may fall on either side of a window edge.
    Straddles,
    /// Every object of the block lies inside the window.
    Inside,
}

/// Placement of data block `h >= 1`.
pub fn placement(headers: &[BlockHeader], h: u64, window: (u64, u64)) -> Placement {
    let (s, e) = window;
    let lo = headers[h as usize - 1].ts;
    let hi = headers[h as usize].ts;
    if hi < s || lo > e {
        Placement::Outside
    } else if lo >= s && hi <= e {
        Placement::Inside
    } else {
        Placement::Straddles
    }
}

/// The contiguous height range of data blocks not entirely outside the
/// window, or `None` if there are none.
pub fn covered_span(headers: &[BlockHeader], window: (u64, u64)) -> Option<(u64, u64)> {
    let tip = headers.len() as u64 - 1;
    let mut lo = None;
    let mut hi = None;
    for h in 1..=tip {
        if placement(headers, h, window) != Placement::Outside {
            lo.get_or_insert(h);
            hi = Some(h);
        }
    }
    Some((lo?, hi?))
}
