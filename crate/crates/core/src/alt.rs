//! Geometric index-scheme solver with adaptive local tuning of Lipschitz
//! estimates.
//!
//! The search keeps a sorted row of trial points. Each iteration it
//! recomputes the adjusted values `z_i`, estimates a local Lipschitz
//! constant `eta_i` at every point by balancing local slopes against a
//! global per-level estimate, scores every interval with a minorant-based
//! characteristic, subdivides the most promising interval, and runs extra
//! bracketing trials whenever the maximal index changes hands.
//!
//! The same loop drives the fixed-constant variant used as a baseline: only
//! the source of the `eta_i` values differs.

use thiserror::Error;

use crate::index_scheme::{evaluate_indexed, EvalCounters, TrialError, TrialRecord};
use crate::problems::ConstrainedProblem;
use crate::report::{IterationDiagnostic, Method, SolveReport, SolveStatus, TraceEvent};

/// Intervals narrower than this fraction of the domain cannot be subdivided
/// meaningfully in binary64; trials there are skipped and a run that selects
/// such an interval stops.
const RESOLUTION_FRACTION: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("reliability parameter r = {0} must be > 1")]
    Reliability(f64),
    #[error("estimate floor xi = {0} must be positive")]
    Floor(f64),
    #[error("accuracy epsilon = {0} must lie in (0, 1)")]
    Accuracy(f64),
}

/// Solver parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AltParams {
    /// Reliability multiplier on Lipschitz estimates, > 1.
    pub r: f64,
    /// Lower bound on every estimate, > 0.
    pub xi: f64,
    /// Stopping accuracy relative to the domain width, in (0, 1).
    pub epsilon: f64,
    /// Safety cap on the number of trials.
    pub max_trials: usize,
}

impl AltParams {
    pub fn new(r: f64, xi: f64, epsilon: f64) -> Result<Self, ParamError> {
        if !(r.is_finite() && r > 1.0) {
            return Err(ParamError::Reliability(r));
        }
        if !(xi.is_finite() && xi > 0.0) {
            return Err(ParamError::Floor(xi));
        }
        if !(epsilon.is_finite() && epsilon > 0.0 && epsilon < 1.0) {
            return Err(ParamError::Accuracy(epsilon));
        }
        Ok(AltParams {
            r,
            xi,
            epsilon,
            max_trials: 1_000_000,
        })
    }

    pub fn with_max_trials(mut self, max_trials: usize) -> Self {
        self.max_trials = max_trials;
        self
    }
}

/// Search state: the sorted trial row and everything recomputed from it.
#[derive(Debug, Clone)]
pub struct SearchState {
    /// Trial records sorted by x; first point is `a`, last is `b`.
    pub trials: Vec<TrialRecord>,
    /// Adjusted values: raw violation below the maximal index, objective
    /// (or violation) minus `z_star` at the maximal index.
    pub z: Vec<f64>,
    /// Maximal index reached so far.
    pub max_index: usize,
    /// Minimal value of the maximal-index function over its points.
    pub z_star: f64,
    /// Adaptive per-level estimates of the global Lipschitz constants,
    /// nondecreasing over the run.
    pub global_estimates: Vec<f64>,
    pub counters: EvalCounters,
    /// Trials and per-iteration diagnostics in execution order.
    pub events: Vec<TraceEvent>,
}

impl SearchState {
    fn x(&self, i: usize) -> f64 {
        self.trials[i].x
    }

    fn nu(&self, i: usize) -> usize {
        self.trials[i].nu
    }

    /// Inserts an executed trial, keeping the row sorted by x.
    fn insert_trial(&mut self, rec: TrialRecord) -> usize {
        let pos = self
            .trials
            .partition_point(|t| t.x < rec.x);
        if pos > 0 {
            assert!(
                self.trials[pos - 1].x < rec.x,
                "duplicate trial point {}",
                rec.x
            );
        }
        if pos < self.trials.len() {
            assert!(
                rec.x < self.trials[pos].x,
                "duplicate trial point {}",
                rec.x
            );
        }
        self.events.push(TraceEvent::Trial(rec.clone()));
        self.trials.insert(pos, rec);
        pos
    }

    /// Recomputes the maximal index, the record value `z_star`, and the
    /// adjusted values. Idempotent.
    pub fn recompute_z(&mut self) {
        let m = self
            .trials
            .iter()
            .map(|t| t.nu)
            .max()
            .expect("at least one trial");
        let z_star = self
            .trials
            .iter()
            .filter(|t| t.nu == m)
            .map(|t| t.last_value())
            .fold(f64::INFINITY, f64::min);
        self.max_index = m;
        self.z_star = z_star;
        self.z = self
            .trials
            .iter()
            .map(|t| {
                if t.nu == m {
                    t.last_value() - z_star
                } else {
                    t.last_value()
                }
            })
            .collect();
    }

    /// Leftmost trial attaining `z_star` at the maximal index.
    pub fn best(&self) -> &TrialRecord {
        let mut best: Option<&TrialRecord> = None;
        for t in &self.trials {
            if t.nu == self.max_index
                && best.is_none_or(|b| t.last_value() < b.last_value())
            {
                best = Some(t);
            }
        }
        best.expect("some trial carries the maximal index")
    }
}

/// Per-point Lipschitz estimates for one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalEstimates {
    /// Local slope information at each point.
    pub lambda: Vec<f64>,
    /// Global information scaled by the adjacent interval widths.
    pub gamma: Vec<f64>,
    /// Final estimates: `max(lambda, gamma, xi)`.
    pub eta: Vec<f64>,
    /// Widest interval touching each level, indexed by level - 1
    /// (0 where a level has no points yet).
    pub x_max: Vec<f64>,
}

impl LocalEstimates {
    /// Estimates pinned to per-level constants, for the fixed-constant
    /// baseline.
    pub fn fixed(state: &SearchState, constants: &[f64]) -> LocalEstimates {
        let n = state.trials.len();
        let eta: Vec<f64> = state.trials.iter().map(|t| constants[t.nu - 1]).collect();
        LocalEstimates {
            lambda: vec![0.0; n],
            gamma: vec![0.0; n],
            eta,
            x_max: vec![0.0; constants.len()],
        }
    }
}

/// Runs the two initial trials at the interval ends and prepares the state.
pub fn init(p: &ConstrainedProblem, params: &AltParams) -> Result<SearchState, TrialError> {
    let mut state = SearchState {
        trials: Vec::new(),
        z: Vec::new(),
        max_index: 0,
        z_star: f64::INFINITY,
        global_estimates: vec![params.xi; p.levels()],
        counters: EvalCounters::new(p.levels()),
        events: Vec::new(),
    };
    let (a, b) = p.domain;
    for x in [a, b] {
        let rec = evaluate_indexed(p, x, &mut state.counters)?;
        state.insert_trial(rec);
    }
    state.recompute_z();
    Ok(state)
}

/// Computes the per-point estimates and refreshes the per-level global
/// estimates (a running max, updated before the spread terms are formed).
pub fn local_estimates(state: &mut SearchState, params: &AltParams) -> LocalEstimates {
    let n = state.trials.len();
    debug_assert!(n >= 2);
    let last = n - 1;

    // Slopes of adjacent same-index differences and violation-over-distance
    // ratios, per the case table keyed on the neighbour indexes.
    let mut lambda = vec![0.0; n];
    for (i, slot) in lambda.iter_mut().enumerate() {
        let sl = |state: &SearchState| {
            (state.z[i] - state.z[i - 1]).abs() / (state.x(i) - state.x(i - 1))
        };
        let sr = |state: &SearchState| {
            (state.z[i + 1] - state.z[i]).abs() / (state.x(i + 1) - state.x(i))
        };
        let vl = |state: &SearchState| state.z[i] / (state.x(i) - state.x(i - 1));
        let vr = |state: &SearchState| state.z[i] / (state.x(i + 1) - state.x(i));

        *slot = if i == 0 {
            match state.nu(0).cmp(&state.nu(1)) {
                std::cmp::Ordering::Equal => sr(state),
                std::cmp::Ordering::Less => vr(state),
                std::cmp::Ordering::Greater => 0.0,
            }
        } else if i == last {
            match state.nu(last - 1).cmp(&state.nu(last)) {
                std::cmp::Ordering::Equal => sl(state),
                std::cmp::Ordering::Greater => vl(state),
                std::cmp::Ordering::Less => 0.0,
            }
        } else {
            use std::cmp::Ordering::*;
            let left = state.nu(i - 1).cmp(&state.nu(i));
            let right = state.nu(i).cmp(&state.nu(i + 1));
            match (left, right) {
                (Equal, Equal) => sl(state).max(sr(state)),
                (Equal, Less) => sl(state).max(vr(state)),
                (Greater, Equal) => sr(state).max(vl(state)),
                (Greater, Less) => vl(state).max(vr(state)),
                (Greater, Greater) => vl(state),
                (Less, Less) => vr(state),
                (Equal, Greater) => sl(state),
                (Less, Equal) => sr(state),
                (Less, Greater) => 0.0,
            }
        };
    }

    // Fold this iteration's slopes into the per-level running maxima.
    for (&lam, trial) in lambda.iter().zip(&state.trials) {
        let level = trial.nu - 1;
        if lam > state.global_estimates[level] {
            state.global_estimates[level] = lam;
        }
    }

    // Widest interval with an endpoint of each level.
    let mut x_max = vec![0.0; state.global_estimates.len()];
    for j in 1..n {
        let width = state.x(j) - state.x(j - 1);
        for level in [state.nu(j) - 1, state.nu(j - 1) - 1] {
            if width > x_max[level] {
                x_max[level] = width;
            }
        }
    }

    let mut gamma = vec![0.0; n];
    let mut eta = vec![0.0; n];
    for i in 0..n {
        let mut widest = 0.0f64;
        if i > 0 {
            widest = widest.max(state.x(i) - state.x(i - 1));
        }
        if i < last {
            widest = widest.max(state.x(i + 1) - state.x(i));
        }
        let level = state.nu(i) - 1;
        gamma[i] = if x_max[level] > 0.0 {
            state.global_estimates[level] * widest / x_max[level]
        } else {
            0.0
        };
        eta[i] = lambda[i].max(gamma[i]).max(params.xi);
    }

    LocalEstimates {
        lambda,
        gamma,
        eta,
        x_max,
    }
}

/// Scores every interval `[x_{i-1}, x_i]`; lower is more promising.
pub fn characteristics(
    state: &SearchState,
    est: &LocalEstimates,
    params: &AltParams,
) -> Vec<f64> {
    let n = state.trials.len();
    let r = params.r;
    let mut out = Vec::with_capacity(n - 1);
    for i in 1..n {
        let (zl, zr) = (state.z[i - 1], state.z[i]);
        let (el, er) = (est.eta[i - 1], est.eta[i]);
        let (xl, xr) = (state.x(i - 1), state.x(i));
        let value = match state.nu(i - 1).cmp(&state.nu(i)) {
            std::cmp::Ordering::Equal => {
                (er * zl + el * zr + r * el * er * (xl - xr)) / (el + er)
            }
            std::cmp::Ordering::Less => zr - r * er * (xr - xl - zl / (r * el)),
            std::cmp::Ordering::Greater => zl - r * el * (xr - xl - zr / (r * er)),
        };
        assert!(value.is_finite(), "non-finite characteristic at interval {i}");
        out.push(value);
    }
    out
}

/// Position (1-based) of the minimal characteristic; ties go to the
/// smallest position.
pub fn select_interval(characteristics: &[f64]) -> usize {
    assert!(!characteristics.is_empty());
    let mut t = 0;
    for (i, &v) in characteristics.iter().enumerate() {
        if v < characteristics[t] {
            t = i;
        }
    }
    t + 1
}

/// Next trial point inside interval `t`: the minorant intersection when the
/// interval ends carry equal indexes, the midpoint otherwise.
pub fn next_point(
    state: &SearchState,
    est: &LocalEstimates,
    t: usize,
    params: &AltParams,
) -> f64 {
    let (xl, xr) = (state.x(t - 1), state.x(t));
    let candidate = if state.nu(t - 1) == state.nu(t) {
        let (zl, zr) = (state.z[t - 1], state.z[t]);
        let (sl, sr) = (params.r * est.eta[t - 1], params.r * est.eta[t]);
        (zl - zr + sl * xl + sr * xr) / (sl + sr)
    } else {
        0.5 * (xl + xr)
    };
    if xl < candidate && candidate < xr {
        candidate
    } else {
        // Only reachable when the supplied estimates undershoot the actual
        // slope (possible with user-provided fixed constants).
        0.5 * (xl + xr)
    }
}

/// Extra bracketing trials after a new evaluation: when the new point raised
/// the maximal index, both halves of its former interval are probed; when it
/// fell below a uniquely-held maximal index, the neighbourhood of that
/// unique point is probed instead.
///
/// `prev_max` is the maximal index before the new trial; `new_pos` is the
/// sorted position of the just-inserted trial. Returns the points actually
/// evaluated.
pub fn augment_after_trial(
    state: &mut SearchState,
    p: &ConstrainedProblem,
    new_pos: usize,
    prev_max: usize,
) -> Result<Vec<f64>, TrialError> {
    let nu_new = state.nu(new_pos);
    let mut targets: Vec<(f64, f64)> = Vec::new();
    if nu_new > prev_max {
        targets.push((state.x(new_pos - 1), state.x(new_pos)));
        targets.push((state.x(new_pos), state.x(new_pos + 1)));
    } else if nu_new < prev_max {
        let holders: Vec<usize> = (0..state.trials.len())
            .filter(|&i| state.nu(i) == prev_max)
            .collect();
        if let [unique] = holders[..] {
            if unique > 0 {
                targets.push((state.x(unique - 1), state.x(unique)));
            }
            if unique + 1 < state.trials.len() {
                targets.push((state.x(unique), state.x(unique + 1)));
            }
        }
    }

    let resolution = RESOLUTION_FRACTION * p.width();
    let mut added = Vec::new();
    for (lo, hi) in targets {
        if (hi - lo) / 2.0 < resolution {
            continue;
        }
        let x = 0.5 * (lo + hi);
        let rec = evaluate_indexed(p, x, &mut state.counters)?;
        state.insert_trial(rec);
        added.push(x);
    }
    Ok(added)
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Trial(#[from] TrialError),
}

/// Runs the adaptive local-tuning method on `p`.
pub fn run(p: &ConstrainedProblem, params: &AltParams) -> Result<SolveReport, SolveError> {
    run_core(p, params, None, Method::Alt)
}

/// Shared search loop. With `fixed_constants` the adaptive estimates are
/// replaced by the given per-level constants and everything else is
/// unchanged.
pub(crate) fn run_core(
    p: &ConstrainedProblem,
    params: &AltParams,
    fixed_constants: Option<&[f64]>,
    method: Method,
) -> Result<SolveReport, SolveError> {
    let mut state = init(p, params)?;
    let width_limit = params.epsilon * p.width();
    let resolution = RESOLUTION_FRACTION * p.width();

    let status = loop {
        state.recompute_z();
        let est = match fixed_constants {
            None => local_estimates(&mut state, params),
            Some(k) => LocalEstimates::fixed(&state, k),
        };
        let scores = characteristics(&state, &est, params);
        let t = select_interval(&scores);
        state.events.push(TraceEvent::Iteration(IterationDiagnostic {
            k: state.counters.total_trials() as usize - 1,
            t,
            r_min: scores[t - 1],
            max_index: state.max_index,
            z_star: state.z_star,
            lambda_by_level: match fixed_constants {
                None => state.global_estimates.clone(),
                Some(k) => k.to_vec(),
            },
        }));

        let selected_width = state.x(t) - state.x(t - 1);
        if selected_width <= width_limit {
            break SolveStatus::Converged;
        }
        if selected_width <= resolution {
            break SolveStatus::TrialBudgetExhausted;
        }
        if state.counters.total_trials() as usize >= params.max_trials {
            break SolveStatus::TrialBudgetExhausted;
        }

        let x_new = next_point(&state, &est, t, params);
        assert!(
            state.x(t - 1) < x_new && x_new < state.x(t),
            "new point {} escaped its interval [{}, {}]",
            x_new,
            state.x(t - 1),
            state.x(t)
        );
        let prev_max = state.max_index;
        let rec = evaluate_indexed(p, x_new, &mut state.counters)?;
        let new_pos = state.insert_trial(rec);
        augment_after_trial(&mut state, p, new_pos, prev_max)?;
    };

    state.recompute_z();
    debug_assert!(state.counters.identities_hold());
    let status = if state.max_index < p.levels() {
        SolveStatus::NoFeasiblePointFound
    } else {
        status
    };
    let best = state.best();
    Ok(SolveReport {
        method,
        status,
        x_best: best.x,
        f_best: best.last_value(),
        max_index: state.max_index,
        counters: state.counters,
        events: state.events,
    })
}
