//! The index scheme: constraints are evaluated one at a time in their given
//! order, stopping at the first violation. The *index* of a point is the
//! position of the first violated constraint, or m+1 when the point is
//! feasible; a *trial* is the evaluation of exactly the first `index`
//! functions at a point.

use serde::Serialize;
use thiserror::Error;

use crate::problems::{ConstrainedProblem, EvalError};

/// A trial: the point, its index, and the values of every function that was
/// actually evaluated there (`values[j-1]` holds `g_j(x)`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    /// Trial birth number, 0-based in execution order.
    pub k: usize,
    pub x: f64,
    pub nu: usize,
    pub values: Vec<f64>,
}

impl TrialRecord {
    /// Value of the last function evaluated at this point, `g_nu(x)`.
    pub fn last_value(&self) -> f64 {
        self.values[self.nu - 1]
    }
}

/// Per-level trial counts for one solver run.
///
/// `counts[j-1]` is the number of trials whose last evaluated function was
/// `g_j`; the final slot counts trials that reached the objective. A trial
/// of index nu evaluates nu functions, so the running `weighted_evals`
/// equals the sum of `j * counts[j-1]` over all levels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalCounters {
    counts: Vec<u64>,
    total_trials: u64,
    weighted_evals: u64,
}

impl EvalCounters {
    /// `levels` is m+1: one slot per constraint plus one for the objective.
    pub fn new(levels: usize) -> Self {
        assert!(levels >= 1);
        EvalCounters {
            counts: vec![0; levels],
            total_trials: 0,
            weighted_evals: 0,
        }
    }

    pub fn record(&mut self, nu: usize) {
        assert!(nu >= 1 && nu <= self.counts.len(), "index out of range");
        self.counts[nu - 1] += 1;
        self.total_trials += 1;
        self.weighted_evals += nu as u64;
    }

    pub fn levels(&self) -> usize {
        self.counts.len()
    }

    /// Trials that stopped at constraint level `j` (1-based, `j <= m`),
    /// or reached the objective when `j == m+1`.
    pub fn count_at_level(&self, j: usize) -> u64 {
        self.counts[j - 1]
    }

    /// Trials that evaluated the objective.
    pub fn objective_trials(&self) -> u64 {
        *self.counts.last().unwrap()
    }

    pub fn total_trials(&self) -> u64 {
        self.total_trials
    }

    /// Total function evaluations: one unit per function actually computed.
    pub fn weighted_evals(&self) -> u64 {
        self.weighted_evals
    }

    /// Checks the two counting identities this type maintains.
    pub fn identities_hold(&self) -> bool {
        let total: u64 = self.counts.iter().sum();
        let weighted: u64 = self
            .counts
            .iter()
            .enumerate()
            .map(|(i, c)| (i as u64 + 1) * c)
            .sum();
        total == self.total_trials && weighted == self.weighted_evals
    }
}

/// A trial aborted because an expression could not be evaluated; names the
/// constraint level at which evaluation failed.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("evaluation failed at level {level} (of {levels}) at x = {x}: {source}")]
pub struct TrialError {
    pub level: usize,
    pub levels: usize,
    pub x: f64,
    pub source: EvalError,
}

/// Executes a trial at `x`: evaluates `g_1, g_2, ...` in order, stopping at
/// the first violated constraint, and evaluates the objective only when all
/// constraints hold. Exactly one counter slot is incremented.
pub fn evaluate_indexed(
    p: &ConstrainedProblem,
    x: f64,
    counters: &mut EvalCounters,
) -> Result<TrialRecord, TrialError> {
    debug_assert_eq!(counters.levels(), p.levels());
    let k = counters.total_trials() as usize;
    let m = p.num_constraints();
    let mut values = Vec::with_capacity(p.levels());
    for level in 1..=m {
        let v = p.constraints[level - 1].eval(x).map_err(|source| TrialError {
            level,
            levels: p.levels(),
            x,
            source,
        })?;
        values.push(v);
        if v > 0.0 {
            counters.record(level);
            return Ok(TrialRecord {
                k,
                x,
                nu: level,
                values,
            });
        }
    }
    let v = p.objective.eval(x).map_err(|source| TrialError {
        level: m + 1,
        levels: p.levels(),
        x,
        source,
    })?;
    values.push(v);
    counters.record(m + 1);
    Ok(TrialRecord {
        k,
        x,
        nu: m + 1,
        values,
    })
}
