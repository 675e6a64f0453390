//! Checks of the local and global claims about `G` and `s(t)`, each ending
//! in a [`Report`] with explicit margins.
//!
//! Every pass/fail decision compares numbers whose error terms have already
//! been moved to the pessimistic side; when that leaves the sign undecided the
//! outcome is [`CheckStatus::Inconclusive`], never a failure.

mod convexity;
mod corollary;
mod lemma1;
mod sector;

pub use convexity::{
    nonconvexity_check, secant_violation_search, slope_violation, Evidence, SecantAttempt, SecantConfig, SecantSearch,
};
pub use corollary::{corollary_check, CorollaryConfig};
pub use lemma1::{divided_third_derivative, lemma1_check, taylor_constant};
pub use sector::{empirical_eps0, sector_area, sector_check, SectorSpec};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::area::AreaError;
use crate::trace::TraceError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Area(#[from] AreaError),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Inconclusive,
    Fail,
}

impl CheckStatus {
    /// The worse of two outcomes: fail over inconclusive over pass.
    pub fn and(self, other: CheckStatus) -> CheckStatus {
        self.max(other)
    }

    pub fn exit_code(self) -> i32 {
        match self {
            CheckStatus::Pass => 0,
            CheckStatus::Fail => 2,
            CheckStatus::Inconclusive => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ViolationKind {
    Plain,
    Log,
}

/// A witnessed failure of convexity of `s` (plain) or `ln s` (log):
/// `lhs > rhs` with `margin = lhs - rhs > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexityViolation {
    pub kind: ViolationKind,
    pub evidence: Evidence,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    /// Built from certified area bounds with directed rounding.
    pub certified: bool,
}

/// Outcome of one check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub check: String,
    pub status: CheckStatus,
    pub margins: BTreeMap<String, f64>,
    pub params: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub violations: Vec<ConvexityViolation>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(check: &str) -> Report {
        Report {
            check: check.to_string(),
            status: CheckStatus::Pass,
            margins: BTreeMap::new(),
            params: BTreeMap::new(),
            violations: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub(crate) fn margin(&mut self, key: &str, v: f64) {
        self.margins.insert(key.to_string(), v);
    }

    pub(crate) fn param(&mut self, key: &str, v: f64) {
        self.params.insert(key.to_string(), v);
    }

    pub(crate) fn require(&mut self, ok: bool, what: &str) {
        if !ok {
            self.status = self.status.and(CheckStatus::Fail);
            self.notes.push(format!("failed: {what}"));
        }
    }
}
