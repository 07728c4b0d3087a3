//! Maps numeric attributes to binary-prefix elements and range predicates to
//! minimal prefix covers, so that range and keyword conditions become one CNF
//! over element sets.

mod cnf;
mod prefix;
mod syntax;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cnf::{
    describe_element, find_mismatch_clause, format_cnf, keyword_element, matches, parse_cnf, select_mismatch_clause,
    Clause, CnfCondition, KEYWORD_TAG,
};
pub use prefix::{range_cover, trans_value, PrefixElement, MAX_WIDTH};
pub use syntax::{format_query, parse_query};

use crate::acc::Multiset;

/// Default bit width of a numeric dimension.
pub const DEFAULT_WIDTH: u8 = 32;

/// Errors from the transform layer.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransformError {
    #[error("width {0} is not supported (must be 1..=63)")]
    InvalidWidth(u8),
    #[error("value {value} does not fit in {width} bits")]
    ValueOutOfRange { value: u64, width: u8 },
    #[error("inverted range [{lo}, {hi}]")]
    InvertedRange { lo: u64, hi: u64 },
    #[error("range starts above the largest value of a {width}-bit dimension")]
    EmptyRange { width: u8 },
    #[error("invalid prefix element")]
    InvalidPrefix,
    #[error("empty clause")]
    EmptyClause,
    #[error("no clause is disjoint from the multiset")]
    NoMismatch,
    #[error("object has {found} numeric attributes but the schema has {expected}")]
    Arity { expected: usize, found: usize },
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("value {0} cannot be quantized")]
    Quantize(String),
}

/// Per-dimension numeric encoding: bit width plus the affine map used to
/// quantize real inputs, `q = round((x - offset) * scale)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimSpec {
    pub width: u8,
    pub offset: f64,
    pub scale: f64,
}

impl DimSpec {
    pub fn integer(width: u8) -> Self {
        DimSpec { width, offset: 0.0, scale: 1.0 }
    }

    /// Parses `WIDTH` or `WIDTH:OFFSET:SCALE`.
    pub fn parse(s: &str) -> Result<Self, TransformError> {
        let bad = || TransformError::Syntax(format!("bad dimension spec {s:?}; expected WIDTH or WIDTH:OFFSET:SCALE"));
        let parts: Vec<&str> = s.split(':').collect();
        let width: u8 = parts[0].trim().parse().map_err(|_| bad())?;
        let d = match parts[1..] {
            [] => DimSpec::integer(width),
            [o, k] => DimSpec { width, offset: o.trim().parse().map_err(|_| bad())?, scale: k.trim().parse().map_err(|_| bad())? },
            _ => return Err(bad()),
        };
        prefix::check_width(d.width)?;
        if !(d.scale.is_finite() && d.scale > 0.0 && d.offset.is_finite()) {
            return Err(bad());
        }
        Ok(d)
    }

    pub fn is_identity(&self) -> bool {
        self.offset == 0.0 && self.scale == 1.0
    }

    pub fn max_value(&self) -> u64 {
        prefix::max_value(self.width)
    }

    /// Quantizes a real value, failing if it lands outside the domain.
    pub fn quantize(&self, x: f64) -> Result<u64, TransformError> {
        let q = ((x - self.offset) * self.scale).round();
        if !q.is_finite() || q < 0.0 || q > self.max_value() as f64 {
            return Err(TransformError::Quantize(x.to_string()));
        }
        Ok(q as u64)
    }

    /// Quantizes a range bound, saturating at the domain edges.
    pub fn quantize_bound(&self, x: f64) -> Result<u64, TransformError> {
        let q = ((x - self.offset) * self.scale).round();
        if q.is_nan() {
            return Err(TransformError::Quantize(x.to_string()));
        }
        Ok(if q <= 0.0 { 0 } else if q >= u64::MAX as f64 { u64::MAX } else { q as u64 })
    }
}

/// Numeric layout of the objects on one chain.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Schema {
    pub dims: Vec<DimSpec>,
}

impl Schema {
    /// Integer-valued dimensions with the given widths.
    pub fn integer(widths: &[u8]) -> Self {
        Schema { dims: widths.iter().map(|w| DimSpec::integer(*w)).collect() }
    }

    pub fn arity(&self) -> usize {
        self.dims.len()
    }

    pub fn validate(&self) -> Result<(), TransformError> {
        if self.dims.len() > 254 {
            return Err(TransformError::Syntax("at most 254 numeric dimensions".into()));
        }
        for d in &self.dims {
            prefix::check_width(d.width)?;
            if !(d.scale.is_finite() && d.scale > 0.0 && d.offset.is_finite()) {
                return Err(TransformError::Quantize(format!("scale {} offset {}", d.scale, d.offset)));
            }
        }
        Ok(())
    }
}

/// A window query or subscription: time window, per-dimension inclusive
/// ranges and a keyword CNF.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Query {
    /// Inclusive `[start, end]`; `None` for subscriptions.
    pub window: Option<(u64, u64)>,
    /// One entry per schema dimension; `None` leaves a dimension unconstrained.
    /// Upper bounds past the domain are clamped to its largest value.
    pub ranges: Vec<Option<(u64, u64)>>,
    /// Keyword condition in CNF: AND over the outer list, OR within each entry.
    pub keywords: Vec<Vec<String>>,
}

impl Query {
    pub fn keywords(cnf: &[&[&str]]) -> Self {
        Query {
            window: None,
            ranges: Vec::new(),
            keywords: cnf.iter().map(|c| c.iter().map(|s| s.to_string()).collect()).collect(),
        }
    }

    pub fn with_window(mut self, start: u64, end: u64) -> Self {
        self.window = Some((start, end));
        self
    }

    pub fn with_ranges(mut self, ranges: Vec<Option<(u64, u64)>>) -> Self {
        self.ranges = ranges;
        self
    }

    /// Direct evaluation of the numeric and keyword predicates, ignoring the
    /// time window.
    pub fn matches_attributes(&self, v: &[u64], w: &[String]) -> bool {
        let ranges_ok = self.ranges.iter().enumerate().all(|(d, r)| match r {
            None => true,
            Some((lo, hi)) => v.get(d).is_some_and(|x| lo <= x && x <= hi),
        });
        ranges_ok && self.keywords.iter().all(|c| c.iter().any(|k| w.contains(k)))
    }

    pub fn in_window(&self, t: u64) -> bool {
        self.window.is_none_or(|(s, e)| s <= t && t <= e)
    }

    /// Direct evaluation of the full predicate.
    pub fn evaluate(&self, t: u64, v: &[u64], w: &[String]) -> bool {
        self.in_window(t) && self.matches_attributes(v, w)
    }
}

/// The transformed attribute multiset of an object: every prefix of every
/// numeric attribute plus the keyword multiset.
pub fn transform_object(v: &[u64], w: &[String], schema: &Schema) -> Result<Multiset, TransformError> {
    if v.len() != schema.arity() {
        return Err(TransformError::Arity { expected: schema.arity(), found: v.len() });
    }
    let mut out = Multiset::new();
    for (d, (x, spec)) in v.iter().zip(&schema.dims).enumerate() {
        for p in trans_value(*x, spec.width, d as u8)? {
            out.insert(p.to_element());
        }
    }
    for k in w {
        out.insert(keyword_element(k));
    }
    Ok(out)
}

/// Converts a query into CNF over elements: one prefix-cover clause per
/// constrained dimension, followed by the keyword clauses in order.
///
/// A dimension whose range covers the whole domain would yield the root
/// prefix, which is a tautology; such clauses are omitted.
pub fn transform_query(q: &Query, schema: &Schema) -> Result<CnfCondition, TransformError> {
    if q.ranges.len() > schema.arity() {
        return Err(TransformError::Arity { expected: schema.arity(), found: q.ranges.len() });
    }
    let mut clauses = Vec::new();
    for (d, r) in q.ranges.iter().enumerate() {
        let Some((lo, hi)) = *r else { continue };
        let spec = &schema.dims[d];
        if lo > hi {
            return Err(TransformError::InvertedRange { lo, hi });
        }
        if lo > spec.max_value() {
            return Err(TransformError::EmptyRange { width: spec.width });
        }
        let cover = range_cover(lo, hi.min(spec.max_value()), spec.width, d as u8)?;
        if cover.len() == 1 && cover[0].len == 0 {
            continue;
        }
        clauses.push(Clause::new(cover.iter().map(|p| p.to_element()))?);
    }
    for c in &q.keywords {
        clauses.push(Clause::keywords(c)?);
    }
    Ok(CnfCondition::new(clauses))
}
