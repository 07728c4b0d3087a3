//! Textual query syntax:
//! `window=[t_s,t_e] range=[(lo1,hi1),(lo2,hi2)] bool="Sedan" AND ("Benz" OR "BMW")`.
//!
//! Each range pair holds the inclusive bounds of one dimension, in schema
//! order. `*` stands for an open bound. `bool=` must come last and extends to
//! the end of the text. Subscriptions simply omit `window=`.

use super::{format_cnf, parse_cnf, DimSpec, Query, Schema, TransformError};

fn syntax(msg: impl Into<String>) -> TransformError {
    TransformError::Syntax(msg.into())
}

/// Splits off a leading bracketed group, returning its inside and the rest.
fn bracketed(s: &str) -> Result<(&str, &str), TransformError> {
    let s = s.trim_start();
    if !s.starts_with('[') {
        return Err(syntax("expected '['"));
    }
    let mut depth = 0;
    for (i, c) in s.char_indices() {
        match c {
            '[' => depth += 1,
            ']' => {
                depth -= 1;
                if depth == 0 {
                    return Ok((&s[1..i], &s[i + 1..]));
                }
            }
            _ => {}
        }
    }
    Err(syntax("unbalanced brackets"))
}

fn parse_time(tok: &str, open: u64) -> Result<u64, TransformError> {
    let tok = tok.trim();
    if tok == "*" {
        return Ok(open);
    }
    tok.parse().map_err(|_| syntax(format!("bad timestamp {tok:?}")))
}

fn parse_bound(tok: &str, spec: &DimSpec, open: u64) -> Result<u64, TransformError> {
    let tok = tok.trim();
    if tok == "*" {
        return Ok(open);
    }
    if spec.is_identity() {
        if let Ok(v) = tok.parse::<u64>() {
            return Ok(v);
        }
    }
    let x: f64 = tok.parse().map_err(|_| syntax(format!("bad range bound {tok:?}")))?;
    spec.quantize_bound(x)
}

fn parse_ranges(inner: &str, schema: &Schema) -> Result<Vec<Option<(u64, u64)>>, TransformError> {
    let mut out = Vec::new();
    let mut rest = inner.trim();
    while !rest.is_empty() {
        let body = rest.strip_prefix('(').ok_or_else(|| syntax("expected '(' in range list"))?;
        let end = body.find(')').ok_or_else(|| syntax("missing ')' in range list"))?;
        let (lo, hi) = body[..end].split_once(',').ok_or_else(|| syntax("range pair needs two bounds"))?;
        let d = out.len();
        let spec = schema.dims.get(d).ok_or(TransformError::Arity { expected: schema.arity(), found: d + 1 })?;
        if lo.trim() == "*" && hi.trim() == "*" {
            out.push(None);
        } else {
            out.push(Some((parse_bound(lo, spec, 0)?, parse_bound(hi, spec, u64::MAX)?)));
        }
        rest = body[end + 1..].trim_start();
        if let Some(r) = rest.strip_prefix(',') {
            rest = r.trim_start();
        } else if !rest.is_empty() {
            return Err(syntax("expected ',' between range pairs"));
        }
    }
    Ok(out)
}

/// Parses the textual query syntax, quantizing range bounds with `schema`.
pub fn parse_query(text: &str, schema: &Schema) -> Result<Query, TransformError> {
    let mut q = Query::default();
    let mut rest = text.trim();
    let (mut saw_window, mut saw_range) = (false, false);
    while !rest.is_empty() {
        if let Some(r) = rest.strip_prefix("window=") {
            if saw_window {
                return Err(syntax("duplicate window="));
            }
            saw_window = true;
            let (inner, r) = bracketed(r)?;
            let (s, e) = inner.split_once(',').ok_or_else(|| syntax("window needs two timestamps"))?;
            let (s, e) = (parse_time(s, 0)?, parse_time(e, u64::MAX)?);
            if s > e {
                return Err(TransformError::InvertedRange { lo: s, hi: e });
            }
            q.window = Some((s, e));
            rest = r.trim_start();
        } else if let Some(r) = rest.strip_prefix("range=") {
            if saw_range {
                return Err(syntax("duplicate range="));
            }
            saw_range = true;
            let (inner, r) = bracketed(r)?;
            q.ranges = parse_ranges(inner, schema)?;
            rest = r.trim_start();
        } else if let Some(r) = rest.strip_prefix("bool=") {
            q.keywords = parse_cnf(r)?;
            rest = "";
        } else {
            return Err(syntax(format!("unexpected text {rest:?}")));
        }
    }
    Ok(q)
}

/// Renders a query in the syntax accepted by [`parse_query`] for integer
/// dimensions.
pub fn format_query(q: &Query) -> String {
    let mut parts = Vec::new();
    if let Some((s, e)) = q.window {
        parts.push(format!("window=[{s},{e}]"));
    }
    if !q.ranges.is_empty() {
        let rs: Vec<String> = q
            .ranges
            .iter()
            .map(|r| match r {
                None => "(*,*)".to_string(),
                Some((lo, u64::MAX)) => format!("({lo},*)"),
                Some((lo, hi)) => format!("({lo},{hi})"),
            })
            .collect();
        parts.push(format!("range=[{}]", rs.join(",")));
    }
    if !q.keywords.is_empty() {
        parts.push(format!("bool={}", format_cnf(&q.keywords)));
    }
    parts.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_syntax() {
        let schema = Schema::integer(&[8, 8]);
        let q = parse_query(r#"window=[10,20] range=[(0,6),(3,*)] bool="Sedan" AND ("Benz" OR "BMW")"#, &schema)
            .unwrap();
        assert_eq!(q.window, Some((10, 20)));
        assert_eq!(q.ranges, vec![Some((0, 6)), Some((3, u64::MAX))]);
        assert_eq!(q.keywords.len(), 2);
        assert_eq!(parse_query(&format_query(&q), &schema).unwrap(), q);
    }

    #[test]
    fn subscription_form_and_wildcards() {
        let schema = Schema::integer(&[8, 8]);
        let q = parse_query(r#"range=[(*,*),(1,2)] bool="x""#, &schema).unwrap();
        assert_eq!(q.window, None);
        assert_eq!(q.ranges, vec![None, Some((1, 2))]);
        assert_eq!(parse_query("", &schema).unwrap(), Query::default());
    }

    #[test]
    fn quantized_bounds() {
        let schema = Schema { dims: vec![DimSpec { width: 20, offset: -180.0, scale: 1000.0 }] };
        let q = parse_query("range=[(-1.5,2.25)]", &schema).unwrap();
        assert_eq!(q.ranges, vec![Some((178_500, 182_250))]);
    }

    #[test]
    fn errors() {
        let schema = Schema::integer(&[8]);
        assert!(parse_query("window=[5,1]", &schema).is_err());
        assert!(parse_query("range=[(1,2),(3,4)]", &schema).is_err());
        assert!(parse_query("window=[1,2", &schema).is_err());
        assert!(parse_query("colour=red", &schema).is_err());
        assert!(parse_query(r#"bool="a" OR ("b")"#, &schema).is_err());
    }
}
