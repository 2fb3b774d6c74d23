//! One-dimensional Lipschitz global optimization with ordered, partially
//! defined multiextremal constraints.
//!
//! Constraints are checked one at a time in a fixed order; past the first
//! violation nothing else is evaluated, which makes the classic penalty
//! reduction inapplicable in general. The search works on the *index* of
//! each point (the position of the first violated constraint) and on
//! minorant geometry built from Lipschitz estimates.
//!
//! Three solvers share the reporting and counting machinery:
//!
//! * [`alt::run`] — the main method: index scheme plus adaptive local
//!   tuning of per-point Lipschitz estimates.
//! * [`baselines::ibba_variant_run`] — the same loop with a priori fixed
//!   per-level constants.
//! * [`baselines::pijavskii_run`] — the classic sawtooth scheme, used on
//!   penalty-reduced problems.
//!
//! The [`harness`] module runs method/problem/accuracy grids, renders
//! summary and ratio tables, and hosts the brute-force oracle used by the
//! tests.

pub mod alt;
pub mod baselines;
pub mod harness;
pub mod index_scheme;
pub mod problems;
pub mod report;

pub use alt::{AltParams, LocalEstimates, SearchState};
pub use index_scheme::{EvalCounters, TrialRecord};
pub use problems::{builtin_problem_6, ConstrainedProblem, Expr};
pub use report::{Method, SolveReport, SolveStatus};
