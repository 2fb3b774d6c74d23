//! Result types shared by the solvers: final status, best point, counters,
//! and the full execution trace.

use serde::Serialize;

use crate::index_scheme::{EvalCounters, TrialRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Alt,
    Ibba,
    Pen,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Alt => "alt",
            Method::Ibba => "ibba",
            Method::Pen => "pen",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "alt" => Ok(Method::Alt),
            "ibba" => Ok(Method::Ibba),
            "pen" => Ok(Method::Pen),
            other => Err(format!("unknown method `{other}` (expected alt|ibba|pen)")),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// The stopping rule fired on an interval of the requested width.
    Converged,
    /// The trial cap (or machine resolution) was hit first.
    TrialBudgetExhausted,
    /// No point satisfying all constraints was ever found; the reported
    /// point is the one of maximal index with minimal violation.
    NoFeasiblePointFound,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::TrialBudgetExhausted => "trial_budget_exhausted",
            SolveStatus::NoFeasiblePointFound => "no_feasible_point_found",
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One line of per-iteration diagnostics: which interval was selected and
/// the state of the adaptive estimates when it happened.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationDiagnostic {
    /// Paper-style iteration counter: number of trials so far minus one.
    pub k: usize,
    /// Selected interval, 1-based position in the sorted point row.
    pub t: usize,
    #[serde(rename = "R_min")]
    pub r_min: f64,
    #[serde(rename = "M")]
    pub max_index: usize,
    pub z_star: f64,
    #[serde(rename = "Lambda")]
    pub lambda_by_level: Vec<f64>,
}

/// Everything that happened during a run, in execution order.
#[derive(Debug, Clone, PartialEq)]
pub enum TraceEvent {
    Trial(TrialRecord),
    Iteration(IterationDiagnostic),
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub method: Method,
    pub status: SolveStatus,
    pub x_best: f64,
    /// Objective value at `x_best` when feasible points were found;
    /// otherwise the minimal constraint violation at the maximal index.
    pub f_best: f64,
    /// Maximal index reached during the search (m+1 means feasible points
    /// were found).
    pub max_index: usize,
    pub counters: EvalCounters,
    pub events: Vec<TraceEvent>,
}

impl SolveReport {
    pub fn trials(&self) -> impl Iterator<Item = &TrialRecord> {
        self.events.iter().filter_map(|e| match e {
            TraceEvent::Trial(t) => Some(t),
            TraceEvent::Iteration(_) => None,
        })
    }

    pub fn diagnostics(&self) -> impl Iterator<Item = &IterationDiagnostic> {
        self.events.iter().filter_map(|e| match e {
            TraceEvent::Iteration(d) => Some(d),
            TraceEvent::Trial(_) => None,
        })
    }
}
