//! On-disk chain directory:
//!
//! ```text
//! <dir>/params.bin            public parameters
//! <dir>/chain.meta            key=value configuration
//! <dir>/blocks/NNNNNNNN.blk   one file per block, written by atomic rename
//! <dir>/headers.bin           all headers, for light clients
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::acc::{Accumulator, PublicParams};

use super::header::{decode_headers, encode_headers, BlockHeader};
use super::{Block, Chain, ChainConfig, ChainError, TemporalObject};

pub const PARAMS_FILE: &str = "params.bin";
pub const META_FILE: &str = "chain.meta";
pub const HEADERS_FILE: &str = "headers.bin";
pub const BLOCKS_DIR: &str = "blocks";

fn block_path(dir: &Path, height: u64) -> PathBuf {
    dir.join(BLOCKS_DIR).join(format!("{height:08}.blk"))
}

/// Writes `bytes` to a temporary sibling file and renames it into place so
/// readers never observe a partial file.
pub(crate) fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), ChainError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn decode_err(path: &Path, err: crate::codec::DecodeError) -> ChainError {
    ChainError::Decode { file: path.display().to_string(), err }
}

/// Loads a parameter file.
pub fn load_params(path: &Path) -> Result<PublicParams, ChainError> {
    let bytes = fs::read(path)?;
    PublicParams::from_bytes(&bytes).map_err(|e| decode_err(path, e))
}

/// A chain persisted in a directory. Single writer.
pub struct ChainStore {
    dir: PathBuf,
    chain: Chain,
}

impl ChainStore {
    /// Creates a new chain directory holding only genesis. Refuses to touch a
    /// directory that already contains a chain.
    pub fn create(dir: &Path, config: ChainConfig, params: Arc<PublicParams>) -> Result<Self, ChainError> {
        if dir.join(META_FILE).exists() {
            return Err(ChainError::Exists(dir.join(META_FILE).display().to_string()));
        }
        let chain = Chain::new(config, params)?;
        fs::create_dir_all(dir.join(BLOCKS_DIR))?;
        atomic_write(&dir.join(PARAMS_FILE), &chain.accumulator().params().to_bytes())?;
        atomic_write(&dir.join(META_FILE), chain.config().to_meta().as_bytes())?;
        let store = ChainStore { dir: dir.to_path_buf(), chain };
        store.write_block(&store.chain.blocks()[0])?;
        store.write_headers()?;
        Ok(store)
    }

    /// Opens an existing chain directory, loading every block.
    pub fn open(dir: &Path) -> Result<Self, ChainError> {
        let (config, params, headers) = LightClientFiles::load(dir)?.into_parts();
        let acc = Accumulator::new(Arc::new(params), &config.salt);
        let mut blocks = Vec::with_capacity(headers.len());
        for (h, header) in headers.iter().enumerate() {
            let path = block_path(dir, h as u64);
            let bytes = fs::read(&path)?;
            let b = Block::decode(&acc, &bytes).map_err(|e| decode_err(&path, e))?;
            if b.height != h as u64 || b.header != *header {
                return Err(ChainError::Config(format!("{} disagrees with {HEADERS_FILE}", path.display())));
            }
            blocks.push(Arc::new(b));
        }
        if blocks.is_empty() {
            return Err(ChainError::Config("chain has no genesis block".into()));
        }
        Ok(ChainStore { dir: dir.to_path_buf(), chain: Chain::from_parts(config, acc, blocks) })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    /// Mines a block, persists it, then publishes it in memory.
    pub fn append(&mut self, objects: Vec<TemporalObject>) -> Result<&Arc<Block>, ChainError> {
        let b = self.chain.mine(objects)?;
        self.write_block(&b)?;
        let b = self.chain.push_mined(b).clone();
        self.write_headers()?;
        Ok(self.chain.block(b.height).unwrap())
    }

    fn write_block(&self, b: &Block) -> Result<(), ChainError> {
        atomic_write(&block_path(&self.dir, b.height), &b.encode())
    }

    fn write_headers(&self) -> Result<(), ChainError> {
        atomic_write(&self.dir.join(HEADERS_FILE), &encode_headers(&self.chain.headers()))
    }
}

/// The only files a light client reads: configuration, parameters, headers.
pub struct LightClientFiles {
    pub config: ChainConfig,
    pub params: PublicParams,
    pub headers: Vec<BlockHeader>,
}

impl LightClientFiles {
    pub fn load(dir: &Path) -> Result<Self, ChainError> {
        let config = ChainConfig::from_meta(&fs::read_to_string(dir.join(META_FILE))?)?;
        let params = load_params(&dir.join(PARAMS_FILE))?;
        if params.construction() != config.construction || params.capacity() != config.capacity {
            return Err(ChainError::ParamsMismatch);
        }
        let hpath = dir.join(HEADERS_FILE);
        let headers = decode_headers(&fs::read(&hpath)?).map_err(|e| decode_err(&hpath, e))?;
        Ok(LightClientFiles { config, params, headers })
    }

    pub fn into_parts(self) -> (ChainConfig, PublicParams, Vec<BlockHeader>) {
        (self.config, self.params, self.headers)
    }
}
