use std::fmt;

use thiserror::Error;

use crate::timebase::TimeNs;

pub type Result<T> = std::result::Result<T, Error>;

/// The feasibility constraint that rejected a request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    /// Conservative SingleInt duty-cycle ceiling imposed by the minimum scan window.
    SingleIntDutyLimit,
    /// Empty integer range for M after applying the positivity and scan-window bounds.
    SingleIntOrderRange,
    /// Conservative MultiInt duty-cycle ceiling for the given M.
    MultiIntDutyLimit,
    /// Empty integer range for k_c.
    MultiIntMultipleRange,
    /// BLE solver found no order M with a realizable scan window.
    BleScanWindow,
    /// Duty-cycle outside the range a solver accepts.
    DutyRange,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Constraint::SingleIntDutyLimit => "SingleInt maximum duty-cycle limit (minimum scan window)",
            Constraint::SingleIntOrderRange => "SingleInt M range [M_min, M_max] is empty",
            Constraint::MultiIntDutyLimit => "MultiInt maximum duty-cycle limit (minimum scan window)",
            Constraint::MultiIntMultipleRange => "MultiInt k_c range [k_min, k_max] is empty",
            Constraint::BleScanWindow => "BLE scan window below hardware minimum for every M",
            Constraint::DutyRange => "duty-cycle outside accepted range",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("infeasible: {constraint}: {detail}")]
    Infeasible { constraint: Constraint, detail: String },
    #[error("no convergence after {iterations} iterations")]
    NoConvergence { iterations: u32 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("unbounded latency: offset {offset} finds no discovery within {limit}")]
    Unbounded { offset: TimeNs, limit: TimeNs },
    #[error("candidate count {count} exceeds budget {budget}")]
    BudgetExceeded { count: u64, budget: u64 },
}

impl Error {
    pub(crate) fn infeasible(constraint: Constraint, detail: impl Into<String>) -> Self {
        Error::Infeasible { constraint, detail: detail.into() }
    }
}
