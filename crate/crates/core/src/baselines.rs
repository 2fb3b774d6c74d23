//! Comparison methods: the classic sawtooth (Pijavskii) scheme on a
//! penalty-reduced problem, and a fixed-constant variant of the index-scheme
//! search, plus the grid slope estimator both of them use for Lipschitz
//! constants.

use thiserror::Error;

use crate::alt::{run_core, AltParams, SolveError};
use crate::index_scheme::{EvalCounters, TrialRecord};
use crate::problems::{ConstrainedProblem, EvalError, Expr};
use crate::report::{IterationDiagnostic, Method, SolveReport, SolveStatus, TraceEvent};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("Lipschitz constant must be positive, got {0}")]
    NonPositiveLipschitz(f64),
    #[error("penalty coefficient must be finite and non-negative, got {0}")]
    BadPenalty(f64),
    #[error("fixed constants must all be positive")]
    BadConstants,
    #[error("expected {expected} fixed constants (one per constraint plus the objective), got {got}")]
    WrongConstantCount { expected: usize, got: usize },
    #[error("evaluation failed at x = {x}: {source}")]
    Eval { x: f64, source: EvalError },
    #[error(transparent)]
    Solve(#[from] SolveError),
}

// ---------------------------------------------------------------------------
// Penalty reduction
// ---------------------------------------------------------------------------

/// The unconstrained reduction `f(x) + P* . max{0, g_1(x), ..., g_m(x)}`.
///
/// Every constraint and the objective must be evaluable over the whole
/// interval: the reduction has no notion of partially defined functions.
#[derive(Debug, Clone)]
pub struct PenaltyProblem {
    pub base: ConstrainedProblem,
    pub p_star: f64,
}

impl PenaltyProblem {
    pub fn eval(&self, x: f64) -> Result<f64, EvalError> {
        let f = self.base.objective.eval(x)?;
        let mut worst = 0.0f64;
        for g in &self.base.constraints {
            worst = worst.max(g.eval(x)?);
        }
        Ok(f + self.p_star * worst)
    }
}

/// Builds the penalty reduction of `p` with coefficient `p_star`.
pub fn penalize(p: &ConstrainedProblem, p_star: f64) -> Result<PenaltyProblem, BaselineError> {
    if !(p_star.is_finite() && p_star >= 0.0) {
        return Err(BaselineError::BadPenalty(p_star));
    }
    Ok(PenaltyProblem {
        base: p.clone(),
        p_star,
    })
}

// ---------------------------------------------------------------------------
// Classic sawtooth scheme
// ---------------------------------------------------------------------------

/// Lower bound of `h` over an interval of the given width from its end
/// values, assuming `lipschitz` bounds the slope.
pub fn pijavskii_characteristic(z_left: f64, z_right: f64, width: f64, lipschitz: f64) -> f64 {
    0.5 * (z_left + z_right) - 0.5 * lipschitz * width
}

/// Abscissa of the minorant intersection inside `[x_left, x_right]`.
pub fn pijavskii_next_point(
    x_left: f64,
    x_right: f64,
    z_left: f64,
    z_right: f64,
    lipschitz: f64,
) -> f64 {
    0.5 * (x_left + x_right) - (z_right - z_left) / (2.0 * lipschitz)
}

/// Minimizes `h` over `interval` with the classic sawtooth scheme under a
/// known Lipschitz constant: both ends are evaluated first, then the
/// interval with the lowest minorant value is split at the minorant
/// intersection until the selected interval is narrower than
/// `epsilon * (b - a)`.
pub fn pijavskii_run(
    h: impl Fn(f64) -> Result<f64, EvalError>,
    lipschitz: f64,
    interval: (f64, f64),
    epsilon: f64,
    max_trials: usize,
) -> Result<SolveReport, BaselineError> {
    if !(lipschitz.is_finite() && lipschitz > 0.0) {
        return Err(BaselineError::NonPositiveLipschitz(lipschitz));
    }
    let (a, b) = interval;
    assert!(b > a, "empty interval");
    assert!(epsilon > 0.0, "accuracy must be positive");

    let mut counters = EvalCounters::new(1);
    let mut events: Vec<TraceEvent> = Vec::new();
    let mut points: Vec<TrialRecord> = Vec::new();

    let evaluate = |x: f64,
                        counters: &mut EvalCounters,
                        events: &mut Vec<TraceEvent>|
     -> Result<TrialRecord, BaselineError> {
        let v = h(x).map_err(|source| BaselineError::Eval { x, source })?;
        let rec = TrialRecord {
            k: counters.total_trials() as usize,
            x,
            nu: 1,
            values: vec![v],
        };
        counters.record(1);
        events.push(TraceEvent::Trial(rec.clone()));
        Ok(rec)
    };

    for x in [a, b] {
        let rec = evaluate(x, &mut counters, &mut events)?;
        points.push(rec);
    }

    let width_limit = epsilon * (b - a);
    let resolution = 1e-12 * (b - a);
    let status = loop {
        let mut t = 1;
        let mut r_min = f64::INFINITY;
        for i in 1..points.len() {
            let r = pijavskii_characteristic(
                points[i - 1].last_value(),
                points[i].last_value(),
                points[i].x - points[i - 1].x,
                lipschitz,
            );
            if r < r_min {
                r_min = r;
                t = i;
            }
        }
        let z_star = points
            .iter()
            .map(|p| p.last_value())
            .fold(f64::INFINITY, f64::min);
        events.push(TraceEvent::Iteration(IterationDiagnostic {
            k: counters.total_trials() as usize - 1,
            t,
            r_min,
            max_index: 1,
            z_star,
            lambda_by_level: vec![lipschitz],
        }));

        let (xl, xr) = (points[t - 1].x, points[t].x);
        if xr - xl <= width_limit {
            break SolveStatus::Converged;
        }
        if xr - xl <= resolution || counters.total_trials() as usize >= max_trials {
            break SolveStatus::TrialBudgetExhausted;
        }

        let candidate = pijavskii_next_point(
            xl,
            xr,
            points[t - 1].last_value(),
            points[t].last_value(),
            lipschitz,
        );
        // With an exact constant the intersection can land on an end point;
        // bisect instead so the row keeps strictly increasing.
        let x_new = if xl < candidate && candidate < xr {
            candidate
        } else {
            0.5 * (xl + xr)
        };
        let rec = evaluate(x_new, &mut counters, &mut events)?;
        points.insert(t, rec);
    };

    let mut best = &points[0];
    for p in &points {
        if p.last_value() < best.last_value() {
            best = p;
        }
    }
    Ok(SolveReport {
        method: Method::Pen,
        status,
        x_best: best.x,
        f_best: best.last_value(),
        max_index: 1,
        counters,
        events,
    })
}

// ---------------------------------------------------------------------------
// Fixed-constant index variant
// ---------------------------------------------------------------------------

/// A priori Lipschitz overestimates `K_1..K_{m+1}`, one per constraint plus
/// the objective.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedConstants {
    values: Vec<f64>,
}

impl FixedConstants {
    pub fn new(values: Vec<f64>) -> Result<Self, BaselineError> {
        if values.is_empty() || values.iter().any(|k| !(k.is_finite() && *k > 0.0)) {
            return Err(BaselineError::BadConstants);
        }
        Ok(FixedConstants { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Index-scheme search with the per-level estimates pinned to the given
/// constants: the same loop as the adaptive method, with no tuning.
pub fn ibba_variant_run(
    p: &ConstrainedProblem,
    constants: &FixedConstants,
    params: &AltParams,
) -> Result<SolveReport, BaselineError> {
    if constants.values.len() != p.levels() {
        return Err(BaselineError::WrongConstantCount {
            expected: p.levels(),
            got: constants.values.len(),
        });
    }
    Ok(run_core(p, params, Some(&constants.values), Method::Ibba)?)
}

// ---------------------------------------------------------------------------
// Lipschitz estimation
// ---------------------------------------------------------------------------

/// Largest adjacent-point slope of `h` over a uniform `n`-point grid,
/// widened by a 10% safety factor. A constant function yields 0; callers
/// must floor the result at their estimate floor.
pub fn estimate_lipschitz_fn(
    h: impl Fn(f64) -> Result<f64, EvalError>,
    interval: (f64, f64),
    n: usize,
) -> Result<f64, BaselineError> {
    assert!(n >= 2, "grid needs at least two points");
    let (a, b) = interval;
    let grid = |i: usize| {
        if i == n - 1 {
            b
        } else {
            a + (b - a) * (i as f64) / ((n - 1) as f64)
        }
    };
    let mut max_slope = 0.0f64;
    let mut prev_x = grid(0);
    let mut prev_v = h(prev_x).map_err(|source| BaselineError::Eval { x: prev_x, source })?;
    for i in 1..n {
        let x = grid(i);
        let v = h(x).map_err(|source| BaselineError::Eval { x, source })?;
        let slope = (v - prev_v).abs() / (x - prev_x);
        if slope > max_slope {
            max_slope = slope;
        }
        prev_x = x;
        prev_v = v;
    }
    Ok(1.1 * max_slope)
}

/// Grid slope estimate for an expression tree.
pub fn estimate_lipschitz(e: &Expr, interval: (f64, f64), n: usize) -> Result<f64, BaselineError> {
    estimate_lipschitz_fn(|x| e.eval(x), interval, n)
}
