//! Conjunctive-normal-form conditions over element sets, and the textual
//! grammar for keyword CNF.

use std::collections::BTreeSet;
use std::fmt;

use super::TransformError;
use crate::acc::{Element, Multiset};
use crate::codec::{DecodeError, Reader, Writer};

/// Tag byte of keyword elements.
pub const KEYWORD_TAG: u8 = 0;

/// Canonical element of a keyword.
pub fn keyword_element(k: &str) -> Element {
    let mut b = Vec::with_capacity(1 + k.len());
    b.push(KEYWORD_TAG);
    b.extend_from_slice(k.as_bytes());
    Element::new(b)
}

/// One OR-clause viewed as a set of elements (an equivalence set).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Clause {
    elements: BTreeSet<Element>,
}

impl Clause {
    pub fn new(elements: impl IntoIterator<Item = Element>) -> Result<Self, TransformError> {
        let elements: BTreeSet<Element> = elements.into_iter().collect();
        if elements.is_empty() {
            return Err(TransformError::EmptyClause);
        }
        Ok(Clause { elements })
    }

    pub fn keywords<S: AsRef<str>>(words: impl IntoIterator<Item = S>) -> Result<Self, TransformError> {
        Clause::new(words.into_iter().map(|w| keyword_element(w.as_ref())))
    }

    pub fn elements(&self) -> impl Iterator<Item = &Element> {
        self.elements.iter()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, e: &Element) -> bool {
        self.elements.contains(e)
    }

    /// The clause as a multiset with every multiplicity 1.
    pub fn to_multiset(&self) -> Multiset {
        self.elements.iter().cloned().collect()
    }

    /// Whether some clause element occurs in `w`.
    pub fn intersects(&self, w: &Multiset) -> bool {
        self.elements.iter().any(|e| w.contains(e))
    }

    pub fn encode(&self, w: &mut Writer) {
        w.len_prefix(self.elements.len());
        for e in &self.elements {
            w.bytes(e.as_bytes());
        }
    }

    pub fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let n = r.count(4, "clause size")?;
        let mut set = BTreeSet::new();
        for _ in 0..n {
            if !set.insert(Element::new(r.bytes("clause element")?)) {
                return Err(DecodeError::Invalid("duplicate clause element"));
            }
        }
        Clause::new(set).map_err(|_| DecodeError::Invalid("empty clause"))
    }
}

/// Human-readable rendering of an element produced by this module.
pub fn describe_element(e: &Element) -> String {
    let b = e.as_bytes();
    match b.split_first() {
        Some((&KEYWORD_TAG, rest)) => format!("{:?}", String::from_utf8_lossy(rest)),
        Some((tag, rest)) => format!("{}_{}", String::from_utf8_lossy(rest), tag),
        None => "<empty>".into(),
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.elements.iter().map(describe_element).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

impl fmt::Debug for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// AND over clauses, OR within each clause.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct CnfCondition {
    pub clauses: Vec<Clause>,
}

impl CnfCondition {
    pub fn new(clauses: Vec<Clause>) -> Self {
        CnfCondition { clauses }
    }

    pub fn contains_clause(&self, c: &Clause) -> bool {
        self.clauses.iter().any(|x| x == c)
    }
}

impl fmt::Display for CnfCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.clauses.is_empty() {
            return f.write_str("TRUE");
        }
        let parts: Vec<String> = self.clauses.iter().map(|c| c.to_string()).collect();
        f.write_str(&parts.join(" AND "))
    }
}

/// Whether every clause intersects `w`.
pub fn matches(w: &Multiset, c: &CnfCondition) -> bool {
    c.clauses.iter().all(|cl| cl.intersects(w))
}

/// Index of the clause selected as mismatch evidence among those for which
/// `disjoint(index, clause)` holds: smallest cardinality, ties broken by clause order.
pub fn select_mismatch_clause(c: &CnfCondition, mut disjoint: impl FnMut(usize, &Clause) -> bool) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, cl) in c.clauses.iter().enumerate() {
        if best.is_some_and(|b| c.clauses[b].len() <= cl.len()) {
            continue;
        }
        if disjoint(i, cl) {
            best = Some(i);
        }
    }
    best
}

/// The clause of `c` disjoint from `w` chosen by the selection rule.
pub fn find_mismatch_clause<'a>(w: &Multiset, c: &'a CnfCondition) -> Result<&'a Clause, TransformError> {
    select_mismatch_clause(c, |_, cl| !cl.intersects(w))
        .map(|i| &c.clauses[i])
        .ok_or(TransformError::NoMismatch)
}

/// Parses keyword CNF such as `"Sedan" AND ("Benz" OR "BMW")`.
///
/// Clauses are single quoted keywords or parenthesized OR-lists; a bare
/// top-level OR-list is accepted as a single clause. `AND`/`OR` are case
/// insensitive and `&`/`|` are accepted as synonyms. Anything that is not
/// already CNF is rejected. The empty string is the empty conjunction.
pub fn parse_cnf(text: &str) -> Result<Vec<Vec<String>>, TransformError> {
    let tokens = tokenize(text)?;
    let mut p = Parser { tokens, pos: 0 };
    if p.tokens.is_empty() {
        return Ok(Vec::new());
    }
    let first = p.clause()?;
    let mut clauses = vec![first];
    match p.peek() {
        Some(Tok::Or) if clauses[0].len() == 1 && p.tokens.first() != Some(&Tok::Open) => {
            while p.eat(&Tok::Or) {
                clauses[0].push(p.keyword()?);
            }
            if p.peek().is_some() {
                return Err(TransformError::Syntax("mixing a bare OR-list with AND is ambiguous; parenthesize".into()));
            }
        }
        _ => {}
    }
    while p.eat(&Tok::And) {
        clauses.push(p.clause()?);
    }
    if let Some(t) = p.peek() {
        return Err(TransformError::Syntax(format!("unexpected {t:?} at token {}", p.pos)));
    }
    Ok(clauses)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    And,
    Or,
    Open,
    Close,
}

fn tokenize(text: &str) -> Result<Vec<Tok>, TransformError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '(' => {
                chars.next();
                out.push(Tok::Open);
            }
            ')' => {
                chars.next();
                out.push(Tok::Close);
            }
            '&' | '∧' => {
                chars.next();
                if c == '&' && chars.peek() == Some(&'&') {
                    chars.next();
                }
                out.push(Tok::And);
            }
            '|' | '∨' => {
                chars.next();
                if c == '|' && chars.peek() == Some(&'|') {
                    chars.next();
                }
                out.push(Tok::Or);
            }
            '"' => {
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some('"') => break,
                        Some('\\') => match chars.next() {
                            Some(e @ ('"' | '\\')) => s.push(e),
                            _ => return Err(TransformError::Syntax("bad escape in keyword".into())),
                        },
                        Some(ch) => s.push(ch),
                        None => return Err(TransformError::Syntax("unterminated keyword".into())),
                    }
                }
                out.push(Tok::Word(s));
            }
            c if c.is_ascii_alphabetic() => {
                let mut w = String::new();
                while let Some(&ch) = chars.peek() {
                    if ch.is_ascii_alphanumeric() || ch == '_' {
                        w.push(ch);
                        chars.next();
                    } else {
                        break;
                    }
                }
                match w.to_ascii_uppercase().as_str() {
                    "AND" => out.push(Tok::And),
                    "OR" => out.push(Tok::Or),
                    _ => return Err(TransformError::Syntax(format!("keywords must be quoted: {w}"))),
                }
            }
            other => return Err(TransformError::Syntax(format!("unexpected character {other:?}"))),
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn keyword(&mut self) -> Result<String, TransformError> {
        match self.tokens.get(self.pos).cloned() {
            Some(Tok::Word(w)) => {
                self.pos += 1;
                Ok(w)
            }
            Some(Tok::Open) => Err(TransformError::Syntax("nested parentheses: condition is not in CNF".into())),
            other => Err(TransformError::Syntax(format!("expected a quoted keyword, found {other:?}"))),
        }
    }

    fn clause(&mut self) -> Result<Vec<String>, TransformError> {
        if self.eat(&Tok::Open) {
            let mut words = vec![self.keyword()?];
            while self.eat(&Tok::Or) {
                words.push(self.keyword()?);
            }
            if self.peek() == Some(&Tok::And) {
                return Err(TransformError::Syntax("AND inside a clause: condition is not in CNF".into()));
            }
            if !self.eat(&Tok::Close) {
                return Err(TransformError::Syntax("missing closing parenthesis".into()));
            }
            Ok(words)
        } else {
            Ok(vec![self.keyword()?])
        }
    }
}

/// Renders keyword CNF in the grammar accepted by [`parse_cnf`].
pub fn format_cnf(clauses: &[Vec<String>]) -> String {
    let quote = |w: &String| format!("\"{}\"", w.replace('\\', "\\\\").replace('"', "\\\""));
    clauses
        .iter()
        .map(|c| {
            if c.len() == 1 {
                quote(&c[0])
            } else {
                format!("({})", c.iter().map(quote).collect::<Vec<_>>().join(" OR "))
            }
        })
        .collect::<Vec<_>>()
        .join(" AND ")
}
