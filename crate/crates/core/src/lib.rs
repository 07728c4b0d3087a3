//! Verifiable Boolean range queries over time windows of an append-only
//! chain of blocks.
//!
//! A miner attaches accumulator digests of each object's attributes to an
//! intra-block Merkle tree and to an inter-block skip list. A service provider
//! answers queries with the matching objects plus a verification object that
//! proves every omitted object or skipped block fails the query. A light
//! client checks the answer against block headers alone.

pub mod acc;
pub mod codec;
pub mod hash;
pub mod transform;
pub mod chain;

#[cfg(test)]
mod testutil;
pub mod query;
pub mod verify;
pub mod subscribe;
pub mod ingest;
