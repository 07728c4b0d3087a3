//! Shared fixtures for unit tests.

use std::sync::{Arc, OnceLock};

use crate::acc::{keygen, Accumulator, Construction, PublicParams};

pub const ACC1_Q: u64 = 512;
pub const ACC2_Q: u64 = 1 << 12;

pub fn params(c: Construction) -> Arc<PublicParams> {
    static P1: OnceLock<Arc<PublicParams>> = OnceLock::new();
    static P2: OnceLock<Arc<PublicParams>> = OnceLock::new();
    match c {
        Construction::Acc1 => P1.get_or_init(|| Arc::new(keygen(c, ACC1_Q, 11).unwrap().0)).clone(),
        Construction::Acc2 => P2.get_or_init(|| Arc::new(keygen(c, ACC2_Q, 12).unwrap().0)).clone(),
    }
}

pub fn capacity(c: Construction) -> u64 {
    match c {
        Construction::Acc1 => ACC1_Q,
        Construction::Acc2 => ACC2_Q,
    }
}

pub fn accumulator(c: Construction) -> Accumulator {
    Accumulator::new(params(c), b"veriq")
}
