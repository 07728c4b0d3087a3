//! Chain configuration and its `chain.meta` key=value form.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::acc::Construction;
use crate::transform::{DimSpec, Schema};

use super::ChainError;

/// Which authenticated indexes a chain maintains (or a query uses).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexMode {
    /// Per-object digests under a plain Merkle tree.
    Nil,
    /// Intra-block index with digests on every node.
    Intra,
    /// Intra-block index plus inter-block skip lists.
    Both,
}

impl IndexMode {
    pub fn name(self) -> &'static str {
        match self {
            IndexMode::Nil => "nil",
            IndexMode::Intra => "intra",
            IndexMode::Both => "both",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nil" => Some(IndexMode::Nil),
            "intra" => Some(IndexMode::Intra),
            "both" => Some(IndexMode::Both),
            _ => None,
        }
    }

    pub const ALL: [IndexMode; 3] = [IndexMode::Nil, IndexMode::Intra, IndexMode::Both];
}

impl fmt::Display for IndexMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// When ingestion cuts a new block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockPolicy {
    /// Fixed number of objects per block.
    Count(usize),
    /// Objects whose timestamps fall in the same `interval`-second bucket.
    Interval(u64),
}

impl BlockPolicy {
    pub fn parse(s: &str) -> Option<Self> {
        let (kind, n) = s.split_once(':')?;
        match kind {
            "count" => n.parse().ok().filter(|n| *n > 0).map(BlockPolicy::Count),
            "interval" => n.parse().ok().filter(|n| *n > 0).map(BlockPolicy::Interval),
            _ => None,
        }
    }
}

impl fmt::Display for BlockPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlockPolicy::Count(n) => write!(f, "count:{n}"),
            BlockPolicy::Interval(s) => write!(f, "interval:{s}"),
        }
    }
}

/// Everything a miner, service provider and light client must agree on,
/// besides the public parameters themselves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub construction: Construction,
    pub capacity: u64,
    pub mode: IndexMode,
    /// Number of skip distances `2..=2^skip_len`.
    pub skip_len: u8,
    /// Required leading zero bits of block hashes.
    pub difficulty: u8,
    pub salt: Vec<u8>,
    pub schema: Schema,
    pub block_policy: BlockPolicy,
}

impl ChainConfig {
    pub fn new(construction: Construction, capacity: u64, schema: Schema) -> Self {
        ChainConfig {
            construction,
            capacity,
            mode: IndexMode::Both,
            skip_len: 5,
            difficulty: 0,
            salt: b"veriq".to_vec(),
            schema,
            block_policy: BlockPolicy::Count(8),
        }
    }

    pub fn with_mode(mut self, mode: IndexMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_skip_len(mut self, n: u8) -> Self {
        self.skip_len = n;
        self
    }

    pub fn validate(&self) -> Result<(), ChainError> {
        self.schema.validate()?;
        if self.skip_len > 32 {
            return Err(ChainError::Config("skip_len must be at most 32".into()));
        }
        Ok(())
    }

    pub fn to_meta(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        };
        kv("version", "1".into());
        kv("construction", self.construction.name().into());
        kv("capacity", self.capacity.to_string());
        kv("index", self.mode.name().into());
        kv("skip_len", self.skip_len.to_string());
        kv("difficulty", self.difficulty.to_string());
        kv("salt", hex::encode(&self.salt));
        kv("block_policy", self.block_policy.to_string());
        kv("dims", self.schema.dims.len().to_string());
        for (i, d) in self.schema.dims.iter().enumerate() {
            kv(&format!("dim.{i}.width"), d.width.to_string());
            kv(&format!("dim.{i}.offset"), d.offset.to_string());
            kv(&format!("dim.{i}.scale"), d.scale.to_string());
        }
        out
    }

    pub fn from_meta(text: &str) -> Result<Self, ChainError> {
        let mut map = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ChainError::Config(format!("line {}: expected key=value", n + 1)))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| map.get(k).ok_or_else(|| ChainError::Config(format!("missing key {k}")));
        let num = |k: &str| -> Result<u64, ChainError> {
            get(k)?.parse().map_err(|_| ChainError::Config(format!("bad number for {k}")))
        };
        let real = |k: &str| -> Result<f64, ChainError> {
            get(k)?.parse().map_err(|_| ChainError::Config(format!("bad number for {k}")))
        };
        if get("version")? != "1" {
            return Err(ChainError::Config("unsupported chain.meta version".into()));
        }
        let dims = num("dims")? as usize;
        let mut schema = Schema::default();
        for i in 0..dims {
            schema.dims.push(DimSpec {
                width: num(&format!("dim.{i}.width"))? as u8,
                offset: real(&format!("dim.{i}.offset"))?,
                scale: real(&format!("dim.{i}.scale"))?,
            });
        }
        let cfg = ChainConfig {
            construction: Construction::parse(get("construction")?)
                .ok_or_else(|| ChainError::Config("bad construction".into()))?,
            capacity: num("capacity")?,
            mode: IndexMode::parse(get("index")?).ok_or_else(|| ChainError::Config("bad index mode".into()))?,
            skip_len: num("skip_len")? as u8,
            difficulty: num("difficulty")? as u8,
            salt: hex::decode(get("salt")?).map_err(|_| ChainError::Config("bad salt hex".into()))?,
            schema,
            block_policy: BlockPolicy::parse(get("block_policy")?)
                .ok_or_else(|| ChainError::Config("bad block policy".into()))?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn meta_round_trip() {
        let mut cfg = ChainConfig::new(Construction::Acc2, 1 << 16, Schema::integer(&[8, 16]));
        cfg.schema.dims[1] = DimSpec { width: 24, offset: -180.5, scale: 1e4 };
        cfg.block_policy = BlockPolicy::Interval(30);
        cfg.mode = IndexMode::Intra;
        let text = cfg.to_meta();
        assert_eq!(ChainConfig::from_meta(&text).unwrap(), cfg);
        assert!(ChainConfig::from_meta("version=1\n").is_err());
    }

    #[test]
    fn policies_parse() {
        assert_eq!(BlockPolicy::parse("count:4"), Some(BlockPolicy::Count(4)));
        assert_eq!(BlockPolicy::parse("interval:30"), Some(BlockPolicy::Interval(30)));
        assert_eq!(BlockPolicy::parse("count:0"), None);
        assert_eq!(BlockPolicy::parse("weekly"), None);
    }
}
