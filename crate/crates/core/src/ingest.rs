//! JSON-lines ingestion and block cutting.
//!
//! Input lines look like `{"t": 1489536000, "v": [40.7, -73.9], "w": ["coffee"]}`.
//! Numeric attributes are quantized with the chain schema. Timestamps must
//! not decrease from one line to the next.

use serde::Deserialize;
use thiserror::Error;

use crate::chain::{BlockPolicy, TemporalObject};
use crate::transform::Schema;

/// A malformed input line (1-based line numbers).
#[derive(Debug, Error)]
#[error("line {line}: {msg}")]
pub struct IngestError {
    pub line: usize,
    pub msg: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObject {
    t: u64,
    #[serde(default)]
    v: Vec<f64>,
    #[serde(default)]
    w: Vec<String>,
}

/// Parses one input line into an object with quantized numeric attributes.
pub fn parse_object(line: &str, schema: &Schema) -> Result<TemporalObject, String> {
    let raw: RawObject = serde_json::from_str(line).map_err(|e| e.to_string())?;
    if raw.v.len() != schema.dims.len() {
        return Err(format!("expected {} numeric attributes, found {}", schema.dims.len(), raw.v.len()));
    }
    let v = raw.v.iter().zip(&schema.dims).map(|(x, d)| d.quantize(*x).map_err(|e| e.to_string())).collect::<Result<_, _>>()?;
    Ok(TemporalObject { t: raw.t, v, w: raw.w })
}

/// Parses a JSON-lines document, skipping blank lines.
pub fn parse_jsonl(text: &str, schema: &Schema) -> Result<Vec<TemporalObject>, IngestError> {
    let mut out: Vec<TemporalObject> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let o = parse_object(line, schema).map_err(|msg| IngestError { line: i + 1, msg })?;
        if let Some(prev) = out.last() {
            if o.t < prev.t {
                return Err(IngestError { line: i + 1, msg: format!("timestamp {} precedes {}", o.t, prev.t) });
            }
        }
        out.push(o);
    }
    Ok(out)
}

/// Groups time-ordered objects into blocks.
///
/// `Count(n)` cuts every `n` objects; `Interval(s)` puts objects whose
/// timestamps share the bucket `t / s` into one block.
pub fn cut_blocks(objects: Vec<TemporalObject>, policy: BlockPolicy) -> Vec<Vec<TemporalObject>> {
    let mut blocks: Vec<Vec<TemporalObject>> = Vec::new();
    for o in objects {
        let fresh = match (policy, blocks.last()) {
            (_, None) => true,
            (BlockPolicy::Count(n), Some(b)) => b.len() >= n,
            (BlockPolicy::Interval(s), Some(b)) => b[0].t / s != o.t / s,
        };
        if fresh {
            blocks.push(Vec::new());
        }
        blocks.last_mut().unwrap().push(o);
    }
    blocks
}

/// Raw objects as JSON lines, with numeric attributes already quantized.
pub fn objects_to_jsonl(objects: &[TemporalObject]) -> String {
    objects.iter().map(|o| serde_json::to_string(o).expect("objects serialize") + "\n").collect()
}

/// Reads objects written by [`objects_to_jsonl`].
pub fn objects_from_jsonl(text: &str) -> Result<Vec<TemporalObject>, IngestError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| IngestError { line: i + 1, msg: e.to_string() }))
        .collect()
}
