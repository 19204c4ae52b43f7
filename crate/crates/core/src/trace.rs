//! Per-iteration history produced by the descent drivers.

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::vector::Vector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Continued,
    TerminatedZeroSubgradient,
    TerminatedTolerance,
    LineSearchStall,
    MaxIterations,
}

impl Status {
    pub fn is_terminal(self) -> bool {
        self != Status::Continued
    }

    /// True for the two statuses that certify (approximate) stationarity.
    pub fn is_converged(self) -> bool {
        matches!(
            self,
            Status::TerminatedZeroSubgradient | Status::TerminatedTolerance
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Continued => "continued",
            Status::TerminatedZeroSubgradient => "terminated_zero_subgradient",
            Status::TerminatedTolerance => "terminated_tolerance",
            Status::LineSearchStall => "line_search_stall",
            Status::MaxIterations => "max_iterations",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Status {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "continued" => Status::Continued,
            "terminated_zero_subgradient" => Status::TerminatedZeroSubgradient,
            "terminated_tolerance" => Status::TerminatedTolerance,
            "line_search_stall" => Status::LineSearchStall,
            "max_iterations" => Status::MaxIterations,
            other => return Err(format!("unknown status `{other}`")),
        })
    }
}

/// State at iterate `n`: the point, its value, the norm of the chosen
/// subgradient there and the step taken from it (0 on the terminal record).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub n: usize,
    /// Stored only when the dimension is within the solver's storage limit.
    pub x: Option<Vector>,
    pub f_value: f64,
    pub subgrad_norm: f64,
    pub step_length: f64,
    /// Cumulative objective evaluations up to and including this record.
    pub oracle_evals: u64,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub records: Vec<IterationRecord>,
    pub termination: Status,
    /// Final iterate, kept regardless of the per-record storage limit.
    pub final_x: Vector,
    pub wall_time: Duration,
}

impl RunTrace {
    pub fn last(&self) -> &IterationRecord {
        self.records
            .last()
            .expect("a trace always has a terminal record")
    }

    /// Number of line-search steps taken.
    pub fn steps(&self) -> usize {
        self.records.len() - 1
    }

    pub fn final_f(&self) -> f64 {
        self.last().f_value
    }

    pub fn final_subgrad_norm(&self) -> f64 {
        self.last().subgrad_norm
    }

    pub fn oracle_evals(&self) -> u64 {
        self.last().oracle_evals
    }

    pub fn min_subgrad_norm(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.subgrad_norm)
            .fold(f64::INFINITY, f64::min)
    }

    /// Checks the structural invariants: consecutive indices from 0, only the
    /// last record terminal, and its status equal to `termination`.
    pub fn is_well_formed(&self) -> bool {
        let Some(last) = self.records.last() else {
            return false;
        };
        self.records.iter().enumerate().all(|(i, r)| r.n == i)
            && self.records[..self.records.len() - 1]
                .iter()
                .all(|r| r.status == Status::Continued)
            && last.status.is_terminal()
            && last.status == self.termination
    }
}
