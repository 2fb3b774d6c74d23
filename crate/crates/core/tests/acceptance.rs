//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured numbers once its assertions hold.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use liptune::alt::{self, characteristics, next_point, AltParams, LocalEstimates, SearchState};
use liptune::baselines::{
    estimate_lipschitz, pijavskii_characteristic, pijavskii_next_point, pijavskii_run,
};
use liptune::harness::{bench_suite, grid_oracle, run_experiment, OracleResult, RunSpec};
use liptune::index_scheme::{EvalCounters, TrialRecord};
use liptune::problems::{builtin_problem_6, load_problem_str, ConstrainedProblem};
use liptune::report::{Method, SolveReport, SolveStatus};

const KNOWN_MINIMIZER: f64 = 3.76984;

fn p6() -> ConstrainedProblem {
    builtin_problem_6()
}

fn params(r: f64, epsilon: f64) -> AltParams {
    AltParams::new(r, 1e-6, epsilon).unwrap()
}

fn two_sines() -> ConstrainedProblem {
    load_problem_str(
        r#"{"name": "two-sines", "domain": [2.7, 7.5],
            "constraints": [], "objective": "sin(x) + sin(10*x/3)"}"#,
    )
    .unwrap()
}

#[test]
fn criterion_01_minimizer_recovery() {
    let p = p6();
    for eps in [1e-4, 1e-5] {
        let bound = eps * p.width();
        let started = Instant::now();
        let report = alt::run(&p, &params(1.3, eps)).unwrap();
        let elapsed = started.elapsed();
        assert!(elapsed.as_secs_f64() < 1.0, "run took {elapsed:?}");
        assert_eq!(report.status, SolveStatus::Converged);
        let error = (report.x_best - KNOWN_MINIMIZER).abs();
        assert!(
            error <= bound,
            "criterion 1 at eps {eps:e}: |x_best - {KNOWN_MINIMIZER}| = {error:.3e} \
             exceeds {bound:.3e}; x_best = {} sits within {:.1e} of the analytic minimizer \
             1.2*pi = {} while the metadata value is {:.3e} away from it",
            report.x_best,
            (report.x_best - 1.2 * std::f64::consts::PI).abs(),
            1.2 * std::f64::consts::PI,
            (1.2 * std::f64::consts::PI - KNOWN_MINIMIZER).abs(),
        );
        println!(
            "criterion 1 (eps {eps:e}): PASS - |x_best - {KNOWN_MINIMIZER}| = {error:.3e} <= {bound:.3e} in {elapsed:?}"
        );
    }
}

#[test]
fn criterion_02_trial_count_band() {
    let p = p6();
    for (eps, cap) in [(1e-4, 150), (1e-5, 200)] {
        let report = alt::run(&p, &params(1.3, eps)).unwrap();
        let trials = report.counters.total_trials();
        assert!(
            trials <= cap,
            "criterion 2: {trials} trials at eps {eps:e} exceed the band of {cap}"
        );
        println!("criterion 2 (eps {eps:e}): PASS - {trials} trials <= {cap}");
    }
}

fn summary_for(method: Method, eps: f64) -> (liptune::harness::SummaryRow, SolveReport) {
    run_experiment(&RunSpec::new("problem6", method, eps)).unwrap()
}

#[test]
fn criterion_03_method_ordering() {
    for eps in [1e-4, 1e-5] {
        let (alt_row, _) = summary_for(Method::Alt, eps);
        let (ibba_row, _) = summary_for(Method::Ibba, eps);
        let (pen_row, _) = summary_for(Method::Pen, eps);
        assert!(
            alt_row.trials < ibba_row.trials && ibba_row.trials < pen_row.trials,
            "criterion 3 trials at eps {eps:e}: alt {} / ibba {} / pen {}",
            alt_row.trials,
            ibba_row.trials,
            pen_row.trials
        );
        assert!(
            alt_row.evals < ibba_row.evals && ibba_row.evals < pen_row.evals,
            "criterion 3 evals at eps {eps:e}: alt {} / ibba {} / pen {}",
            alt_row.evals,
            ibba_row.evals,
            pen_row.evals
        );
        println!(
            "criterion 3 (eps {eps:e}): PASS - trials {}/{}/{} and evals {}/{}/{} are ordered",
            alt_row.trials,
            ibba_row.trials,
            pen_row.trials,
            alt_row.evals,
            ibba_row.evals,
            pen_row.evals
        );
    }
}

#[test]
fn criterion_04_counting_identities() {
    for eps in [1e-4, 1e-5] {
        for method in [Method::Alt, Method::Ibba, Method::Pen] {
            let (row, report) = summary_for(method, eps);
            assert!(report.counters.identities_hold());
            let weighted = row.n_g[0] + 2 * row.n_g[1] + 3 * row.n_f;
            assert_eq!(
                row.evals, weighted,
                "criterion 4: weighted identity broken for {method} at eps {eps:e}"
            );
            assert_eq!(row.trials, row.n_g[0] + row.n_g[1] + row.n_g[2] + row.n_f);
            if method == Method::Pen {
                assert_eq!(
                    row.evals,
                    3 * row.trials,
                    "criterion 4: pen must charge every level per trial"
                );
            }
        }
    }
    println!("criterion 4: PASS - counting identities exact for every method at both accuracies");
}

#[test]
fn criterion_05_equal_eta_reduction() {
    let mut rng = StdRng::seed_from_u64(0x11b5);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.gen_range(2..=8usize);
        let mut xs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0)).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup_by(|a, b| (*a - *b).abs() < 0.05);
        if xs.len() < 2 {
            continue;
        }
        let trials: Vec<TrialRecord> = xs
            .iter()
            .enumerate()
            .map(|(k, &x)| TrialRecord {
                k,
                x,
                nu: 1,
                values: vec![0.0],
            })
            .collect();
        let z: Vec<f64> = trials.iter().map(|_| rng.gen_range(0.0..2.0)).collect();
        // A state the method could actually be in: the shared estimate
        // dominates every interval slope, as local tuning guarantees.
        let steepest = xs
            .windows(2)
            .zip(z.windows(2))
            .map(|(x, z)| (z[1] - z[0]).abs() / (x[1] - x[0]))
            .fold(0.0f64, f64::max);
        let eta = (steepest * rng.gen_range(1.0..1.5)).max(1e-6);
        let r = rng.gen_range(1.01..3.0);
        let mut params = AltParams::new(r, 1e-6, 1e-4).unwrap();
        params.r = r;

        let mut state = SearchState {
            trials,
            z: Vec::new(),
            max_index: 0,
            z_star: f64::INFINITY,
            global_estimates: vec![params.xi],
            counters: EvalCounters::new(1),
            events: Vec::new(),
        };
        state.recompute_z();
        state.z = z.clone();
        let est = LocalEstimates {
            lambda: vec![0.0; state.trials.len()],
            gamma: vec![0.0; state.trials.len()],
            eta: vec![eta; state.trials.len()],
            x_max: vec![0.0],
        };

        let scores = characteristics(&state, &est, &params);
        let lipschitz = r * eta;
        for (i, &score) in scores.iter().enumerate() {
            let reference = pijavskii_characteristic(
                z[i],
                z[i + 1],
                state.trials[i + 1].x - state.trials[i].x,
                lipschitz,
            );
            worst = worst.max((score - reference).abs());
        }
        for t in 1..state.trials.len() {
            let ours = next_point(&state, &est, t, &params);
            let reference = pijavskii_next_point(
                state.trials[t - 1].x,
                state.trials[t].x,
                z[t - 1],
                z[t],
                lipschitz,
            );
            worst = worst.max((ours - reference).abs());
        }
    }
    assert!(
        worst <= 1e-12,
        "criterion 5: equal-estimate reduction diverges by {worst:.3e}"
    );
    println!("criterion 5: PASS - worst divergence across 1000 random states = {worst:.3e}");
}

/// Replays a report's trace, checking that every non-initial trial landed
/// strictly inside the interval between its then-current neighbours and that
/// every trial record is internally consistent.
fn check_trace_invariants(p: &ConstrainedProblem, report: &SolveReport) {
    let (a, b) = p.domain;
    let m = p.num_constraints();
    let mut seen: Vec<f64> = Vec::new();
    for (i, t) in report.trials().enumerate() {
        assert_eq!(t.values.len(), t.nu, "values must have exactly nu entries");
        for &v in &t.values[..t.nu - 1] {
            assert!(v <= 0.0, "pre-index values must be feasible");
        }
        if t.nu <= m {
            assert!(t.last_value() > 0.0, "a violated level must be positive");
        }
        assert!((a..=b).contains(&t.x));
        if i < 2 {
            assert_eq!(t.x, [a, b][i], "first two trials are the interval ends");
        } else {
            let pos = seen.partition_point(|&x| x < t.x);
            assert!(
                pos > 0 && pos < seen.len(),
                "trial {} at {} is not interior",
                i,
                t.x
            );
            assert!(seen[pos - 1] < t.x && t.x < seen[pos], "duplicate trial");
        }
        let pos = seen.partition_point(|&x| x < t.x);
        seen.insert(pos, t.x);
    }
    // Per-level global estimates never decrease and respect the floor; the
    // record value never worsens while the maximal index is unchanged.
    let mut previous: Option<(usize, f64, Vec<f64>)> = None;
    for d in report.diagnostics() {
        if let Some((m_before, z_before, lam_before)) = &previous {
            for (now, before) in d.lambda_by_level.iter().zip(lam_before) {
                assert!(now >= before, "global estimate decreased");
            }
            if d.max_index == *m_before {
                assert!(d.z_star <= z_before + 1e-15, "record value increased");
            }
        }
        previous = Some((d.max_index, d.z_star, d.lambda_by_level.clone()));
    }
}

#[test]
fn criterion_06_per_iteration_invariants() {
    let p = p6();
    let mut runs = 0;
    for eps in [1e-4, 1e-5] {
        for method in [Method::Alt, Method::Ibba] {
            let (_, report) = summary_for(method, eps);
            check_trace_invariants(&p, &report);
            runs += 1;
        }
        for r in [1.3, 1.9, 2.5, 3.0] {
            let report = alt::run(&p, &params(r, eps)).unwrap();
            check_trace_invariants(&p, &report);
            runs += 1;
        }
    }
    let line = two_sines();
    let report = alt::run(&line, &params(1.3, 1e-4)).unwrap();
    check_trace_invariants(&line, &report);
    runs += 1;
    println!("criterion 6: PASS - ordering and interiority held across {runs} traced runs");
}

#[test]
fn criterion_07_r_robustness() {
    let p = p6();
    let eps = 1e-4;
    let bound = eps * p.width();
    for r in [1.3, 1.9, 2.5, 3.0] {
        let report = alt::run(&p, &params(r, eps)).unwrap();
        assert_eq!(report.status, SolveStatus::Converged);
        let error = (report.x_best - KNOWN_MINIMIZER).abs();
        assert!(
            error <= bound,
            "criterion 7: r = {r} landed {error:.3e} from the known minimizer"
        );
    }
    println!("criterion 7: PASS - same minimizer recovered for r in {{1.3, 1.9, 2.5, 3.0}}");
}

#[test]
fn criterion_08_oracle_agreement() {
    let p = p6();
    let OracleResult::Feasible { x_ref, f_ref } = grid_oracle(&p, 10_000_000).unwrap() else {
        panic!("criterion 8: the builtin problem must be feasible");
    };
    for method in [Method::Alt, Method::Ibba, Method::Pen] {
        let (_, report) = summary_for(method, 1e-4);
        assert_eq!(report.status, SolveStatus::Converged);
        let gap = (report.f_best - f_ref).abs();
        assert!(
            gap <= 1e-3,
            "criterion 8: {method} disagrees with the oracle on f* by {gap:.3e}"
        );
    }
    let x_error = (x_ref - KNOWN_MINIMIZER).abs();
    assert!(
        x_error <= 1e-6,
        "criterion 8: oracle x_ref = {x_ref} is {x_error:.3e} from the known minimizer {KNOWN_MINIMIZER}; \
         the feasible vertex of the third objective branch lies at 1.2*pi = {} and the metadata \
         value differs from it in the fifth decimal",
        1.2 * std::f64::consts::PI,
    );
    println!(
        "criterion 8: PASS - oracle ({x_ref}, {f_ref}) matches every converged run within 1e-3"
    );
}

#[test]
fn criterion_09_pijavskii_sanity() {
    let p = two_sines();
    let OracleResult::Feasible { x_ref, f_ref } = grid_oracle(&p, 1_000_001).unwrap() else {
        panic!("criterion 9: unconstrained problem cannot be infeasible");
    };
    // Independent cross-check of the oracle before relying on it.
    assert!((x_ref - 5.14573536).abs() < 1e-5);
    let lipschitz = estimate_lipschitz(&p.objective, p.domain, 1_000_000).unwrap();
    assert!(lipschitz > 0.0);
    let eps = 1e-4;
    let report = pijavskii_run(|x| p.objective.eval(x), lipschitz, p.domain, eps, 1_000_000).unwrap();
    assert_eq!(report.status, SolveStatus::Converged);
    let error = (report.x_best - x_ref).abs();
    let bound = eps * p.width();
    assert!(
        error <= bound,
        "criterion 9: sawtooth landed {error:.3e} from the oracle minimizer (bound {bound:.3e})"
    );
    assert!((report.f_best - f_ref).abs() <= 1e-4);
    println!(
        "criterion 9: PASS - sawtooth with estimated constant {lipschitz:.3} found {} within {bound:.1e} of {x_ref}",
        report.x_best
    );
}

#[test]
fn criterion_10_determinism() {
    let specs: Vec<RunSpec> = [Method::Alt, Method::Ibba, Method::Pen]
        .into_iter()
        .flat_map(|method| {
            [1e-4, 1e-5].into_iter().map(move |eps| {
                let mut spec = RunSpec::new("problem6", method, eps);
                spec.diagnostics = true;
                spec
            })
        })
        .collect();

    let read_dir = |dir: &std::path::Path| -> BTreeMap<String, Vec<u8>> {
        std::fs::read_dir(dir)
            .unwrap()
            .map(|entry| {
                let entry = entry.unwrap();
                (
                    entry.file_name().to_string_lossy().into_owned(),
                    std::fs::read(entry.path()).unwrap(),
                )
            })
            .collect()
    };

    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    bench_suite(&specs, Some(dir_a.path())).unwrap();
    bench_suite(&specs, Some(dir_b.path())).unwrap();
    let files_a = read_dir(dir_a.path());
    let files_b = read_dir(dir_b.path());
    assert_eq!(
        files_a.keys().collect::<Vec<_>>(),
        files_b.keys().collect::<Vec<_>>()
    );
    // Summary, ratio table, and one trace per run.
    assert_eq!(files_a.len(), 2 + specs.len());
    for (name, bytes) in &files_a {
        assert_eq!(
            bytes,
            &files_b[name],
            "criterion 10: {name} differs between identical bench runs"
        );
    }
    println!(
        "criterion 10: PASS - {} output files byte-identical across two bench executions",
        files_a.len()
    );
}
