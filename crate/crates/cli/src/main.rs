//! Benchmark CLI: single runs, method/problem/accuracy grids, and the
//! brute-force grid oracle.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use liptune::harness::{
    bench_suite, grid_oracle, resolve_problem, run_experiment, OracleResult, RunSpec, SummaryRow,
    DEFAULT_ORACLE_GRID,
};
use liptune::report::Method;

#[derive(Parser)]
#[command(name = "liptune", version, about = "One-dimensional Lipschitz global optimization with ordered partially defined constraints", long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one method on one problem and print the summary row.
    Run(RunArgs),
    /// Run a method x problem x accuracy grid and write summary, ratio, and
    /// trace files.
    Bench(BenchArgs),
    /// Brute-force reference: feasible grid point with the minimal
    /// objective.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Built-in problem name or path to a problem file.
    #[arg(long)]
    problem: String,
    /// Solver: alt (adaptive local tuning), ibba (fixed constants), or pen
    /// (penalty reduction with the sawtooth scheme).
    #[arg(long)]
    method: Method,
    /// Stopping accuracy relative to the domain width.
    #[arg(long)]
    eps: f64,
    /// Reliability multiplier on Lipschitz estimates.
    #[arg(long, default_value_t = 1.3)]
    r: f64,
    /// Floor for all Lipschitz estimates.
    #[arg(long, default_value_t = 1e-6)]
    xi: f64,
    /// Penalty coefficient for pen (defaults to the problem metadata).
    #[arg(long)]
    pstar: Option<f64>,
    /// Write the trial trace (line-delimited JSON) here.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the one-row summary CSV here.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Include per-iteration diagnostic records in the trace.
    #[arg(long)]
    diagnostics: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated problem names or files.
    #[arg(long, value_delimiter = ',', required = true)]
    problems: Vec<String>,
    /// Comma-separated methods out of alt, ibba, pen.
    #[arg(long, value_delimiter = ',', required = true)]
    methods: Vec<Method>,
    /// Comma-separated accuracies.
    #[arg(long, value_delimiter = ',', required = true)]
    eps: Vec<f64>,
    /// Output directory for summary.csv, ratios.csv, and traces.
    #[arg(long)]
    out: PathBuf,
    /// Reliability multiplier on Lipschitz estimates.
    #[arg(long, default_value_t = 1.3)]
    r: f64,
    /// Floor for all Lipschitz estimates.
    #[arg(long, default_value_t = 1e-6)]
    xi: f64,
    /// Include per-iteration diagnostic records in the traces.
    #[arg(long)]
    diagnostics: bool,
}

#[derive(Args)]
struct OracleArgs {
    /// Built-in problem name or path to a problem file.
    #[arg(long)]
    problem: String,
    /// Number of grid points.
    #[arg(long, default_value_t = DEFAULT_ORACLE_GRID)]
    grid: usize,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn print_rows(rows: &[SummaryRow]) {
    println!("{}", SummaryRow::CSV_HEADER);
    for row in rows {
        println!("{}", row.to_csv_line());
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run(args) => {
            let mut spec = RunSpec::new(&args.problem, args.method, args.eps);
            spec.r = args.r;
            spec.xi = args.xi;
            spec.p_star = args.pstar;
            spec.trace_path = args.trace;
            spec.summary_path = args.summary;
            spec.diagnostics = args.diagnostics;
            let (row, _) = run_experiment(&spec).context("run failed")?;
            print_rows(std::slice::from_ref(&row));
            Ok(())
        }
        Command::Bench(args) => {
            let mut specs = Vec::new();
            for problem in &args.problems {
                for &method in &args.methods {
                    for &eps in &args.eps {
                        let mut spec = RunSpec::new(problem, method, eps);
                        spec.r = args.r;
                        spec.xi = args.xi;
                        spec.diagnostics = args.diagnostics;
                        specs.push(spec);
                    }
                }
            }
            let bench = bench_suite(&specs, Some(&args.out)).context("bench failed")?;
            print_rows(&bench.rows);
            println!();
            println!("wrote {}", args.out.join("summary.csv").display());
            println!("wrote {}", args.out.join("ratios.csv").display());
            Ok(())
        }
        Command::Oracle(args) => {
            let p = resolve_problem(&args.problem).context("problem load failed")?;
            match grid_oracle(&p, args.grid).context("oracle failed")? {
                OracleResult::Feasible { x_ref, f_ref } => {
                    println!("problem: {}", p.name);
                    println!("x_ref: {x_ref}");
                    println!("f_ref: {f_ref}");
                }
                OracleResult::Infeasible => {
                    println!("problem: {}", p.name);
                    println!("infeasible: no grid point satisfies every constraint");
                }
            }
            Ok(())
        }
    }
}
