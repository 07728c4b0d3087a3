//! Verification outcomes, rendered as text or JSON.

use std::fmt;
use std::time::Duration;

use serde::Serialize;

/// Why an answer was rejected.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectKind {
    /// A disjointness proof failed its pairing check.
    BadProof,
    /// A recomputed Merkle, skip-list or pre-skipped hash differs from the header.
    RootMismatch,
    /// Part of the queried span is not accounted for.
    #[serde(rename = "gap")]
    UncoveredGap,
    /// A returned object does not satisfy the query.
    #[serde(rename = "non-matching")]
    NonMatchingResult,
    /// A returned object is not committed by the VO.
    ForeignObject,
    /// A proof is stated against a set that is not a clause of the query.
    ClauseForgery,
    /// An aggregate digest is not the sum of its members.
    BatchMismatch,
    /// The VO is structurally invalid.
    Malformed,
}

impl RejectKind {
    pub fn label(self) -> &'static str {
        match self {
            RejectKind::BadProof => "bad-proof",
            RejectKind::RootMismatch => "root-mismatch",
            RejectKind::UncoveredGap => "gap",
            RejectKind::NonMatchingResult => "non-matching",
            RejectKind::ForeignObject => "foreign-object",
            RejectKind::ClauseForgery => "clause-forgery",
            RejectKind::BatchMismatch => "batch-mismatch",
            RejectKind::Malformed => "malformed",
        }
    }
}

impl fmt::Display for RejectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// The first violation found.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Rejection {
    pub kind: RejectKind,
    pub detail: String,
}

/// Work done during verification.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct VerifyStats {
    /// Heights the answer had to cover, inclusive.
    pub span: Option<(u64, u64)>,
    pub blocks_covered: u64,
    pub skips: u64,
    pub objects_revealed: u64,
    pub hidden_leaves: u64,
    pub results: u64,
    pub proofs_checked: u64,
    pub batches_checked: u64,
    /// Product-of-pairings evaluations.
    pub pairing_checks: u64,
}

/// Accept/reject decision with diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub accepted: bool,
    pub rejection: Option<Rejection>,
    pub stats: VerifyStats,
    pub elapsed_us: u64,
}

impl VerifyReport {
    pub(crate) fn new(outcome: Result<(), Rejection>, stats: VerifyStats, elapsed: Duration) -> Self {
        VerifyReport {
            accepted: outcome.is_ok(),
            rejection: outcome.err(),
            stats,
            elapsed_us: elapsed.as_micros() as u64,
        }
    }

    pub fn kind(&self) -> Option<RejectKind> {
        self.rejection.as_ref().map(|r| r.kind)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.rejection {
            None => writeln!(f, "ACCEPT")?,
            Some(r) => writeln!(f, "REJECT: {} ({})", r.kind, r.detail)?,
        }
        let s = &self.stats;
        if let Some((lo, hi)) = s.span {
            writeln!(f, "  span:            blocks {lo}..={hi}")?;
        } else {
            writeln!(f, "  span:            none")?;
        }
        writeln!(f, "  blocks covered:  {} ({} skips)", s.blocks_covered, s.skips)?;
        writeln!(f, "  results:         {} ({} objects disclosed, {} hidden leaves)", s.results, s.objects_revealed, s.hidden_leaves)?;
        writeln!(f, "  proofs:          {} single, {} batched", s.proofs_checked, s.batches_checked)?;
        writeln!(f, "  pairing checks:  {}", s.pairing_checks)?;
        write!(f, "  time:            {} us", self.elapsed_us)
    }
}
