//! Benchmark harness: runs method x problem x accuracy grids, renders
//! summary and ratio tables, emits traces, and hosts the brute-force grid
//! oracle the tests check solvers against.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::alt::{self, AltParams, ParamError, SolveError};
use crate::baselines::{
    estimate_lipschitz, estimate_lipschitz_fn, ibba_variant_run, penalize, pijavskii_run,
    BaselineError, FixedConstants,
};
use crate::index_scheme::{EvalCounters, TrialError};
use crate::problems::{builtin, load_problem, ConstrainedProblem, ProblemError};
use crate::report::{Method, SolveReport, SolveStatus, TraceEvent};

/// Grid used when a Lipschitz constant has to be estimated for a baseline.
pub const LIPSCHITZ_GRID: usize = 1_000_000;

/// Default grid for the brute-force oracle.
pub const DEFAULT_ORACLE_GRID: usize = 10_000_000;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown problem `{0}` (not a built-in name or a readable file)")]
    UnknownProblem(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Trial(#[from] TrialError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error("method pen needs a penalty coefficient: set one in the problem file or pass it explicitly")]
    MissingPenalty,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// One benchmark run: which problem, which method, and with what knobs.
/// Everything is deterministic; there is no seed.
#[derive(Debug, Clone)]
pub struct RunSpec {
    /// Built-in problem name or path to a problem file.
    pub problem: String,
    pub method: Method,
    pub epsilon: f64,
    pub r: f64,
    pub xi: f64,
    /// Penalty coefficient override for `pen`.
    pub p_star: Option<f64>,
    /// Per-level constant overrides for `ibba`.
    pub k_overrides: Option<Vec<f64>>,
    pub max_trials: usize,
    pub trace_path: Option<PathBuf>,
    pub summary_path: Option<PathBuf>,
    pub diagnostics: bool,
}

impl RunSpec {
    pub fn new(problem: &str, method: Method, epsilon: f64) -> Self {
        RunSpec {
            problem: problem.to_string(),
            method,
            epsilon,
            r: 1.3,
            xi: 1e-6,
            p_star: None,
            k_overrides: None,
            max_trials: 1_000_000,
            trace_path: None,
            summary_path: None,
            diagnostics: false,
        }
    }
}

/// One row of the summary table; the CSV column order matches the field
/// order here.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub problem: String,
    pub method: Method,
    pub epsilon: f64,
    /// Trials that stopped at constraint 1, 2, 3 (0 for absent levels).
    pub n_g: [u64; 3],
    /// Trials that reached the objective.
    pub n_f: u64,
    pub trials: u64,
    pub evals: u64,
    pub x_best: f64,
    pub f_best: f64,
    pub status: SolveStatus,
}

impl SummaryRow {
    fn from_report(problem: &str, epsilon: f64, report: &SolveReport) -> SummaryRow {
        let counters = &report.counters;
        debug_assert!(counters.identities_hold());
        let m = counters.levels() - 1;
        let mut n_g = [0u64; 3];
        for (slot, level) in n_g.iter_mut().zip(1..=m) {
            *slot = counters.count_at_level(level);
        }
        SummaryRow {
            problem: problem.to_string(),
            method: report.method,
            epsilon,
            n_g,
            n_f: counters.objective_trials(),
            trials: counters.total_trials(),
            evals: counters.weighted_evals(),
            x_best: report.x_best,
            f_best: report.f_best,
            status: report.status,
        }
    }

    pub const CSV_HEADER: &'static str =
        "problem,method,epsilon,n_g1,n_g2,n_g3,n_f,trials,evals,x_best,f_best,status";

    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.problem,
            self.method,
            self.epsilon,
            self.n_g[0],
            self.n_g[1],
            self.n_g[2],
            self.n_f,
            self.trials,
            self.evals,
            self.x_best,
            self.f_best,
            self.status
        )
    }
}

/// Resolves a problem source: built-in name first, then file path.
pub fn resolve_problem(source: &str) -> Result<ConstrainedProblem, HarnessError> {
    if let Some(p) = builtin(source) {
        return Ok(p);
    }
    let path = Path::new(source);
    if path.is_file() {
        return Ok(load_problem(path)?);
    }
    Err(HarnessError::UnknownProblem(source.to_string()))
}

fn fixed_constants_for(
    p: &ConstrainedProblem,
    spec: &RunSpec,
) -> Result<FixedConstants, HarnessError> {
    let values = if let Some(ks) = &spec.k_overrides {
        ks.clone()
    } else if let Some(ks) = &p.lipschitz_overestimates {
        ks.clone()
    } else {
        let mut ks = Vec::with_capacity(p.levels());
        for level in 1..=p.levels() {
            let k = estimate_lipschitz(p.function(level), p.domain, LIPSCHITZ_GRID)?;
            ks.push(k.max(spec.xi));
        }
        ks
    };
    Ok(FixedConstants::new(values)?)
}

fn execute(p: &ConstrainedProblem, spec: &RunSpec) -> Result<SolveReport, HarnessError> {
    let params = AltParams::new(spec.r, spec.xi, spec.epsilon)?.with_max_trials(spec.max_trials);
    match spec.method {
        Method::Alt => Ok(alt::run(p, &params)?),
        Method::Ibba => {
            let constants = fixed_constants_for(p, spec)?;
            Ok(ibba_variant_run(p, &constants, &params)?)
        }
        Method::Pen => {
            let p_star = spec
                .p_star
                .or(p.penalty_coefficient)
                .ok_or(HarnessError::MissingPenalty)?;
            let pen = penalize(p, p_star)?;
            let lipschitz = estimate_lipschitz_fn(|x| pen.eval(x), p.domain, LIPSCHITZ_GRID)?
                .max(spec.xi);
            let mut report = pijavskii_run(
                |x| pen.eval(x),
                lipschitz,
                p.domain,
                spec.epsilon,
                spec.max_trials,
            )?;
            // The cost model charges every constraint plus the objective for
            // each trial of the reduced problem.
            let mut counters = EvalCounters::new(p.levels());
            for _ in 0..report.counters.total_trials() {
                counters.record(p.levels());
            }
            report.counters = counters;
            Ok(report)
        }
    }
}

/// Runs one spec and writes any requested output files. Identical specs
/// produce byte-identical outputs.
pub fn run_experiment(spec: &RunSpec) -> Result<(SummaryRow, SolveReport), HarnessError> {
    let p = resolve_problem(&spec.problem)?;
    let report = execute(&p, spec)?;
    let row = SummaryRow::from_report(&p.name, spec.epsilon, &report);
    if let Some(path) = &spec.trace_path {
        write_trace(&report, path, spec.diagnostics)?;
    }
    if let Some(path) = &spec.summary_path {
        write_summary(std::slice::from_ref(&row), path)?;
    }
    Ok((row, report))
}

/// Writes the trace (and optionally the per-iteration diagnostics) as
/// line-delimited JSON.
pub fn write_trace(
    report: &SolveReport,
    path: &Path,
    include_diagnostics: bool,
) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut out = Vec::new();
    for event in &report.events {
        match event {
            TraceEvent::Trial(t) => {
                serde_json::to_writer(&mut out, t).expect("trial serializes");
                out.push(b'\n');
            }
            TraceEvent::Iteration(d) if include_diagnostics => {
                serde_json::to_writer(&mut out, d).expect("diagnostic serializes");
                out.push(b'\n');
            }
            TraceEvent::Iteration(_) => {}
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes summary rows as CSV in the fixed column order.
pub fn write_summary(rows: &[SummaryRow], path: &Path) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut out = String::new();
    out.push_str(SummaryRow::CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv_line());
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Improvement ratios of the two baselines over the adaptive method for one
/// problem at one accuracy; a column is absent when that baseline was not
/// part of the suite.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioRow {
    pub epsilon: f64,
    pub problem: String,
    pub trials_pen_over_alt: Option<f64>,
    pub trials_ibba_over_alt: Option<f64>,
    pub evals_pen_over_alt: Option<f64>,
    pub evals_ibba_over_alt: Option<f64>,
}

impl RatioRow {
    pub const CSV_HEADER: &'static str =
        "epsilon,problem,trials_pen_over_alt,trials_ibba_over_alt,evals_pen_over_alt,evals_ibba_over_alt";

    pub fn to_csv_line(&self) -> String {
        let cell = |v: Option<f64>| v.map(|x| format!("{x:.2}")).unwrap_or_default();
        format!(
            "{},{},{},{},{},{}",
            self.epsilon,
            self.problem,
            cell(self.trials_pen_over_alt),
            cell(self.trials_ibba_over_alt),
            cell(self.evals_pen_over_alt),
            cell(self.evals_ibba_over_alt)
        )
    }
}

/// Everything a bench run produces.
#[derive(Debug, Clone)]
pub struct BenchOutput {
    pub rows: Vec<SummaryRow>,
    pub ratios: Vec<RatioRow>,
}

fn eps_tag(epsilon: f64) -> String {
    format!("{epsilon:e}")
}

/// Runs every spec, sorts the rows by (problem, method, accuracy), and
/// derives the baseline-over-adaptive ratio table with one averages row per
/// accuracy. With `out_dir` set, writes `summary.csv`, `ratios.csv`, and one
/// trace file per run.
pub fn bench_suite(
    specs: &[RunSpec],
    out_dir: Option<&Path>,
) -> Result<BenchOutput, HarnessError> {
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
    }
    let mut rows = Vec::with_capacity(specs.len());
    for spec in specs {
        let mut spec = spec.clone();
        if let Some(dir) = out_dir {
            let p = resolve_problem(&spec.problem)?;
            spec.trace_path = Some(dir.join(format!(
                "{}_{}_{}.trace.jsonl",
                p.name,
                spec.method,
                eps_tag(spec.epsilon)
            )));
        }
        let (row, _) = run_experiment(&spec)?;
        rows.push(row);
    }
    rows.sort_by(|a, b| {
        (a.problem.as_str(), a.method.as_str())
            .cmp(&(b.problem.as_str(), b.method.as_str()))
            .then(a.epsilon.total_cmp(&b.epsilon))
    });

    let ratios = ratio_table(&rows);

    if let Some(dir) = out_dir {
        write_summary(&rows, &dir.join("summary.csv"))?;
        write_ratios(&ratios, &dir.join("ratios.csv"))?;
    }
    Ok(BenchOutput { rows, ratios })
}

/// Writes ratio rows as CSV.
pub fn write_ratios(rows: &[RatioRow], path: &Path) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut out = String::new();
    out.push_str(RatioRow::CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv_line());
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

fn ratio_table(rows: &[SummaryRow]) -> Vec<RatioRow> {
    // Distinct accuracies in ascending order.
    let mut epsilons: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
    epsilons.sort_by(f64::total_cmp);
    epsilons.dedup();

    let mut out = Vec::new();
    for &eps in &epsilons {
        let mut problems: Vec<&str> = rows
            .iter()
            .filter(|r| r.epsilon == eps)
            .map(|r| r.problem.as_str())
            .collect();
        problems.sort_unstable();
        problems.dedup();

        let mut block = Vec::new();
        for problem in problems {
            let find = |method: Method| {
                rows.iter()
                    .find(|r| r.epsilon == eps && r.problem == problem && r.method == method)
            };
            let Some(alt) = find(Method::Alt) else {
                continue;
            };
            let pen = find(Method::Pen);
            let ibba = find(Method::Ibba);
            if pen.is_none() && ibba.is_none() {
                continue;
            }
            let over_alt = |v: u64, a: u64| v as f64 / a as f64;
            block.push(RatioRow {
                epsilon: eps,
                problem: problem.to_string(),
                trials_pen_over_alt: pen.map(|p| over_alt(p.trials, alt.trials)),
                trials_ibba_over_alt: ibba.map(|p| over_alt(p.trials, alt.trials)),
                evals_pen_over_alt: pen.map(|p| over_alt(p.evals, alt.evals)),
                evals_ibba_over_alt: ibba.map(|p| over_alt(p.evals, alt.evals)),
            });
        }
        if block.is_empty() {
            continue;
        }
        let mean = |get: fn(&RatioRow) -> Option<f64>| {
            let values: Vec<f64> = block.iter().filter_map(get).collect();
            if values.is_empty() {
                None
            } else {
                Some(values.iter().sum::<f64>() / values.len() as f64)
            }
        };
        let average = RatioRow {
            epsilon: eps,
            problem: "average".to_string(),
            trials_pen_over_alt: mean(|r| r.trials_pen_over_alt),
            trials_ibba_over_alt: mean(|r| r.trials_ibba_over_alt),
            evals_pen_over_alt: mean(|r| r.evals_pen_over_alt),
            evals_ibba_over_alt: mean(|r| r.evals_ibba_over_alt),
        };
        out.extend(block);
        out.push(average);
    }
    out
}

// ---------------------------------------------------------------------------
// Brute-force oracle
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleResult {
    Feasible { x_ref: f64, f_ref: f64 },
    Infeasible,
}

/// Exhaustively evaluates the full constraint chain on a uniform `n`-point
/// grid (end points included) and returns the feasible grid point with the
/// minimal objective, or `Infeasible` when no grid point passes every
/// constraint. Ties keep the leftmost point.
pub fn grid_oracle(p: &ConstrainedProblem, n: usize) -> Result<OracleResult, TrialError> {
    assert!(n >= 2, "grid needs at least two points");
    let (a, b) = p.domain;
    let levels = p.levels();
    let mut best: Option<(f64, f64)> = None;
    'grid: for i in 0..n {
        let x = if i == n - 1 {
            b
        } else {
            a + (b - a) * (i as f64) / ((n - 1) as f64)
        };
        for (level, g) in p.constraints.iter().enumerate() {
            let v = g.eval(x).map_err(|source| TrialError {
                level: level + 1,
                levels,
                x,
                source,
            })?;
            if v > 0.0 {
                continue 'grid;
            }
        }
        let f = p.objective.eval(x).map_err(|source| TrialError {
            level: levels,
            levels,
            x,
            source,
        })?;
        if best.is_none_or(|(_, fb)| f < fb) {
            best = Some((x, f));
        }
    }
    Ok(match best {
        Some((x_ref, f_ref)) => OracleResult::Feasible { x_ref, f_ref },
        None => OracleResult::Infeasible,
    })
}
