//! Temporal objects and their canonical encoding.

use serde::{Deserialize, Serialize};

use crate::acc::Multiset;
use crate::codec::{DecodeError, Reader, Writer};
use crate::hash::{hash_bytes, hash_parts, Digest};
use crate::transform::{transform_object, Schema, TransformError};

/// A data object `<t, V, W>`: timestamp, numeric vector and keyword multiset.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TemporalObject {
    pub t: u64,
    pub v: Vec<u64>,
    pub w: Vec<String>,
}

impl TemporalObject {
    pub fn new(t: u64, v: Vec<u64>, w: Vec<&str>) -> Self {
        TemporalObject { t, v, w: w.into_iter().map(String::from).collect() }
    }

    /// Canonical encoding of everything except the timestamp.
    pub fn body_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.encode_body(&mut w);
        w.finish()
    }

    fn encode_body(&self, w: &mut Writer) {
        w.len_prefix(self.v.len());
        for x in &self.v {
            w.u64(*x);
        }
        w.len_prefix(self.w.len());
        for k in &self.w {
            w.bytes(k.as_bytes());
        }
    }

    pub fn body_hash(&self) -> Digest {
        hash_bytes(&self.body_bytes())
    }

    /// Content hash binding the timestamp and the body. Splitting the two lets
    /// an out-of-window leaf be opened to its timestamp alone.
    pub fn id(&self) -> Digest {
        object_id(self.t, &self.body_hash())
    }

    pub fn transformed(&self, schema: &Schema) -> Result<Multiset, TransformError> {
        transform_object(&self.v, &self.w, schema)
    }

    pub fn encode(&self, w: &mut Writer) {
        w.u64(self.t);
        self.encode_body(w);
    }

    pub fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let t = r.u64("timestamp")?;
        let nv = r.count(8, "numeric arity")?;
        let mut v = Vec::with_capacity(nv);
        for _ in 0..nv {
            v.push(r.u64("numeric value")?);
        }
        let nw = r.count(4, "keyword count")?;
        let mut w = Vec::with_capacity(nw);
        for _ in 0..nw {
            let b = r.bytes("keyword")?;
            w.push(String::from_utf8(b.to_vec()).map_err(|_| DecodeError::Invalid("keyword utf-8"))?);
        }
        Ok(TemporalObject { t, v, w })
    }
}

/// The object id computed from a timestamp and a body hash.
pub fn object_id(t: u64, body_hash: &Digest) -> Digest {
    hash_parts(&[&t.to_le_bytes(), body_hash])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encoding_round_trip_and_id() {
        let o = TemporalObject::new(7, vec![1, 2], vec!["a", "b", "a"]);
        let mut w = Writer::new();
        o.encode(&mut w);
        let buf = w.finish();
        let mut r = Reader::new(&buf);
        assert_eq!(TemporalObject::decode(&mut r).unwrap(), o);
        r.finish().unwrap();
        assert_eq!(o.id(), object_id(7, &o.body_hash()));
        let mut o2 = o.clone();
        o2.t = 8;
        assert_ne!(o.id(), o2.id());
        assert_eq!(o.body_hash(), o2.body_hash());
    }

    #[test]
    fn keyword_boundaries_are_unambiguous() {
        let a = TemporalObject::new(1, vec![], vec!["ab", "c"]);
        let b = TemporalObject::new(1, vec![], vec!["a", "bc"]);
        assert_ne!(a.id(), b.id());
    }
}
