//! Miner-side block construction: intra-block indexes, skip lists, headers,
//! toy proof-of-work, and the on-disk block store.

mod block;
mod config;
mod header;
pub mod intra;
mod object;
pub mod skip;
mod store;

use std::sync::Arc;

use thiserror::Error;

pub use block::Block;
pub use config::{BlockPolicy, ChainConfig, IndexMode};
pub use header::{decode_headers, encode_headers, validate_headers, BlockHeader, HeaderError, HEADER_LEN};
pub use intra::{IntraIndex, IntraNode, NodeKind};
pub use object::{object_id, TemporalObject};
pub use skip::SkipEntry;
pub use store::{load_params, ChainStore, LightClientFiles};

use crate::acc::{AccError, Accumulator, PublicParams};
use crate::codec::DecodeError;
use crate::hash::ZERO_DIGEST;
use crate::transform::TransformError;

/// Errors from block construction and storage.
#[derive(Debug, Error)]
pub enum ChainError {
    #[error(transparent)]
    Acc(#[from] AccError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error("a block needs at least one object")]
    EmptyBlock,
    #[error("object timestamp {t} precedes the previous block timestamp {prev}")]
    Timestamp { t: u64, prev: u64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("public parameters do not match the chain configuration")]
    ParamsMismatch,
    #[error("decode error in {file}: {err}")]
    Decode { file: String, err: DecodeError },
    #[error("{0} already exists")]
    Exists(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// An in-memory chain: configuration, accumulator and all blocks.
#[derive(Clone, Debug)]
pub struct Chain {
    config: ChainConfig,
    acc: Accumulator,
    blocks: Vec<Arc<Block>>,
}

impl Chain {
    /// Starts a chain holding only the genesis block.
    pub fn new(config: ChainConfig, params: Arc<PublicParams>) -> Result<Self, ChainError> {
        config.validate()?;
        if params.construction() != config.construction || params.capacity() != config.capacity {
            return Err(ChainError::ParamsMismatch);
        }
        let acc = Accumulator::new(params, &config.salt);
        let genesis = Block::genesis(config.difficulty);
        Ok(Chain { config, acc, blocks: vec![Arc::new(genesis)] })
    }

    pub(crate) fn from_parts(config: ChainConfig, acc: Accumulator, blocks: Vec<Arc<Block>>) -> Self {
        Chain { config, acc, blocks }
    }

    pub fn config(&self) -> &ChainConfig {
        &self.config
    }

    pub fn accumulator(&self) -> &Accumulator {
        &self.acc
    }

    pub fn blocks(&self) -> &[Arc<Block>] {
        &self.blocks
    }

    pub fn block(&self, height: u64) -> Option<&Arc<Block>> {
        self.blocks.get(height as usize)
    }

    /// Height of the newest block.
    pub fn tip(&self) -> u64 {
        self.blocks.len() as u64 - 1
    }

    pub fn headers(&self) -> Vec<BlockHeader> {
        self.blocks.iter().map(|b| b.header).collect()
    }

    /// Builds (but does not append) the next block from `objects`.
    pub fn mine(&self, objects: Vec<TemporalObject>) -> Result<Block, ChainError> {
        if objects.is_empty() {
            return Err(ChainError::EmptyBlock);
        }
        let prev = self.blocks.last().unwrap();
        let mut leaf_sets = Vec::with_capacity(objects.len());
        for o in &objects {
            if o.t < prev.header.ts {
                return Err(ChainError::Timestamp { t: o.t, prev: prev.header.ts });
            }
            leaf_sets.push(o.transformed(&self.config.schema)?);
        }
        let height = self.tip() + 1;
        let index = IntraIndex::build(&objects, leaf_sets, &self.acc, self.config.mode != IndexMode::Nil)?;
        let skips = if self.config.mode == IndexMode::Both { self.build_skips(height)? } else { Vec::new() };
        let header = BlockHeader {
            prev_hash: prev.hash(),
            ts: objects.iter().map(|o| o.t).max().unwrap(),
            nonce: 0,
            merkle_root: index.root().hash,
            skip_list_root: skip::skip_list_root(skips.iter().map(|s| &s.hash)),
        }
        .mine(self.config.difficulty);
        debug_assert_ne!(header.merkle_root, ZERO_DIGEST);
        Ok(Block { height, header, objects, index: Some(index), skips })
    }

    fn build_skips(&self, height: u64) -> Result<Vec<SkipEntry>, ChainError> {
        let mut out = Vec::new();
        for k in skip::distances_at(height, self.config.skip_len) {
            let span: Vec<&Arc<Block>> = (height - k..height).rev().map(|h| &self.blocks[h as usize]).collect();
            let hashes: Vec<_> = span.iter().map(|b| b.hash()).collect();
            let roots: Vec<_> = span.iter().map(|b| b.root_summary().expect("data block with digest")).collect();
            out.push(SkipEntry::build(k, &hashes, &roots, &self.acc)?);
        }
        Ok(out)
    }

    /// Mines and appends a block.
    pub fn append(&mut self, objects: Vec<TemporalObject>) -> Result<&Arc<Block>, ChainError> {
        let b = self.mine(objects)?;
        self.blocks.push(Arc::new(b));
        Ok(self.blocks.last().unwrap())
    }

    pub(crate) fn push_mined(&mut self, block: Block) -> &Arc<Block> {
        debug_assert_eq!(block.height, self.tip() + 1);
        self.blocks.push(Arc::new(block));
        self.blocks.last().unwrap()
    }
}

#[cfg(test)]
mod tests;
