//! Report primitives shared by validation and certificate stages.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// One inequality `lhs ≤ rhs` with measured slack `rhs − lhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

impl Check {
    pub fn le(lhs: f64, rhs: f64) -> Self {
        Check { holds: lhs <= rhs, lhs, rhs, slack: rhs - lhs }
    }

    pub fn lt(lhs: f64, rhs: f64) -> Self {
        Check { holds: lhs < rhs, lhs, rhs, slack: rhs - lhs }
    }

    /// Passes when `flag` is set; lhs/rhs carry the measured quantities.
    pub fn flag(holds: bool, lhs: f64, rhs: f64) -> Self {
        Check { holds, lhs, rhs, slack: rhs - lhs }
    }
}

/// property name → check, in deterministic order.
pub type ValidationReport = BTreeMap<String, Check>;

pub fn all_hold(r: &ValidationReport) -> bool {
    r.values().all(|c| c.holds)
}

pub fn failures(r: &ValidationReport) -> Vec<String> {
    r.iter().filter(|(_, c)| !c.holds).map(|(k, c)| format!("{k}: lhs={:e} rhs={:e}", c.lhs, c.rhs)).collect()
}
