//! Experiment runner for the `dlra` integrators.
//!
//! Three subcommands share the problem flags:
//!
//! * `run`: sweeps `--rank × --stepsize` for one integrator and writes error,
//!   norm and smallest retained singular value at equally spaced times;
//! * `compare`: final-time errors of ksl and bug side by side per rank;
//! * `singvals`: leading singular values of the reference at the final time.
//!
//! Exit status: 0 on success, 2 on flag errors, 3 when bug, bug-modified or
//! ksl produce non-finite factors or break down, 1 on I/O errors. Divergence
//! of rk4-factors is an expected outcome: its rows are written with NaN
//! errors and the status stays 0.

pub mod args;
pub mod reference;
pub mod setup;
pub mod sweep;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::Path;

use clap::Parser;
use dlra::matrix::MatrixIntegrator;
use dlra::problems::Problem;
use dlra::scalar::real_to_f64;
use dlra::svd::singular_values;
use dlra::tensor::matricize;
use dlra::Scalar;
use rayon::prelude::*;

use args::{Cli, Command, CompareArgs, RunArgs, SingvalsArgs};
use setup::{usage, AnyProblem, CliError, Setup, Sweep};
use sweep::{csv_rows, run_config, Method, Stop, CSV_HEADER};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "DLR_THREADS";

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit status.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = with_pool(|| match cli.command {
        Command::Run(a) => cmd_run(&a),
        Command::Compare(a) => cmd_compare(&a),
        Command::Singvals(a) => cmd_singvals(&a),
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn with_pool(f: impl FnOnce() -> Result<(), CliError> + Send) -> Result<(), CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => f(),
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| usage(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            pool.install(f)
        }
    }
}

fn write_output(path: Option<&Path>, content: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, content).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// `0, T/k, 2T/k, …, T`.
fn sample_times(tmax: f64, samples: usize) -> Vec<f64> {
    (0..=samples).map(|k| if k == samples { tmax } else { tmax * k as f64 / samples as f64 }).collect()
}

fn method_for(setup: &Setup, integrator: MatrixIntegrator) -> Result<Method, CliError> {
    match (setup.d, integrator) {
        (2, i) => Ok(Method::Matrix(i)),
        (_, MatrixIntegrator::Bug) => Ok(Method::Tucker),
        (d, i) => Err(usage(format!("integrator {i} is matrix-only; --dims {d} supports bug"))),
    }
}

fn cmd_run(a: &RunArgs) -> Result<(), CliError> {
    let setup = Setup::from_args(&a.problem)?;
    let method = method_for(&setup, a.integrator)?;
    let sweep = Sweep::from_args(&a.sweep, &setup, a.integrator)?;
    if a.samples == 0 {
        return Err(usage("--samples must be at least 1"));
    }
    let times = sample_times(setup.tmax, a.samples);
    match setup.build()? {
        AnyProblem::Real(p) => run_sweep(&p, &setup, &sweep, method, &times, a.out.as_deref()),
        AnyProblem::Complex(p) => run_sweep(&p, &setup, &sweep, method, &times, a.out.as_deref()),
    }
}

fn run_sweep<T: Scalar>(
    problem: &Problem<T>,
    setup: &Setup,
    sweep: &Sweep,
    method: Method,
    times: &[f64],
    out: Option<&Path>,
) -> Result<(), CliError> {
    let reference = reference::obtain(problem, times, setup)?;
    let configs: Vec<(usize, f64)> =
        sweep.ranks.iter().flat_map(|&r| sweep.steps.iter().map(move |&h| (r, h))).collect();
    let outcomes: Vec<_> = configs
        .par_iter()
        .map(|&(rank, h)| run_config(problem, &reference, method, rank, h, &sweep.substep))
        .collect();

    let experiment = setup.experiment.to_string();
    let mut csv = format!("{CSV_HEADER}\n");
    let mut failures = Vec::new();
    for (&(rank, h), outcome) in configs.iter().zip(outcomes) {
        let outcome = outcome?;
        csv_rows(&mut csv, &experiment, method, setup.d, setup.n, rank, h, &outcome.samples);
        let label = format!("{experiment} {} rank={rank} h={h}", method.name());
        match (&outcome.stop, method) {
            (None, _) => {}
            (Some(stop), Method::Matrix(MatrixIntegrator::Rk4Factors)) => {
                eprintln!("note: {label} stopped: {}", describe(stop));
            }
            (Some(stop), _) => failures.push(format!("{label}: {}", describe(stop))),
        }
    }
    write_output(out, &csv)?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(failures.join("; ")))
    }
}

fn describe(stop: &Stop) -> String {
    match stop {
        Stop::Blowup { t } => format!("non-finite or exploding factors before t={t}"),
        Stop::Breakdown(e) => e.clone(),
    }
}

fn cmd_compare(a: &CompareArgs) -> Result<(), CliError> {
    let setup = Setup::from_args(&a.problem)?;
    if setup.d != 2 {
        return Err(usage("compare needs a matrix problem (--dims 2)"));
    }
    let sweep = Sweep::from_args(&a.sweep, &setup, MatrixIntegrator::Bug)?;
    if sweep.steps.len() != 1 {
        return Err(usage("compare takes exactly one --stepsize"));
    }
    let times = [0.0, setup.tmax];
    match setup.build()? {
        AnyProblem::Real(p) => compare(&p, &setup, &sweep, &times, a.out.as_deref()),
        AnyProblem::Complex(p) => compare(&p, &setup, &sweep, &times, a.out.as_deref()),
    }
}

fn compare<T: Scalar>(
    problem: &Problem<T>,
    setup: &Setup,
    sweep: &Sweep,
    times: &[f64],
    out: Option<&Path>,
) -> Result<(), CliError> {
    let reference = reference::obtain(problem, times, setup)?;
    let h = sweep.steps[0];
    let pairs: Vec<(usize, MatrixIntegrator)> = sweep
        .ranks
        .iter()
        .flat_map(|&r| [MatrixIntegrator::Ksl, MatrixIntegrator::Bug].map(|i| (r, i)))
        .collect();
    let errors: Vec<_> = pairs
        .par_iter()
        .map(|&(rank, i)| {
            run_config(problem, &reference, Method::Matrix(i), rank, h, &sweep.substep)
                .map(|o| o.samples.last().map_or(f64::NAN, |s| s.error))
        })
        .collect::<dlra::Result<_>>()?;

    let mut csv = String::from("rank,error_ksl,error_bug\n");
    let mut bad = Vec::new();
    for (k, &rank) in sweep.ranks.iter().enumerate() {
        let (ksl, bug) = (errors[2 * k], errors[2 * k + 1]);
        writeln!(csv, "{rank},{ksl:e},{bug:e}").expect("writing to a String cannot fail");
        if !(ksl.is_finite() && ksl > 0.0 && bug.is_finite() && bug > 0.0) {
            bad.push(format!("rank {rank}: ksl {ksl:e}, bug {bug:e}"));
        }
    }
    write_output(out, &csv)?;
    if bad.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("errors must be finite and positive: {}", bad.join("; "))))
    }
}

fn cmd_singvals(a: &SingvalsArgs) -> Result<(), CliError> {
    let setup = Setup::from_args(&a.problem)?;
    if a.k == 0 {
        return Err(usage("--k must be at least 1"));
    }
    let times = [0.0, setup.tmax];
    let sigma = match setup.build()? {
        AnyProblem::Real(p) => final_singular_values(&p, &setup, &times)?,
        AnyProblem::Complex(p) => final_singular_values(&p, &setup, &times)?,
    };
    let k = if a.k > sigma.len() {
        eprintln!("warning: --k {} exceeds the {} available singular values; truncating", a.k, sigma.len());
        sigma.len()
    } else {
        a.k
    };
    let mut csv = String::from("index,sigma\n");
    for (j, s) in sigma.iter().take(k).enumerate() {
        writeln!(csv, "{},{s:e}", j + 1).expect("writing to a String cannot fail");
    }
    write_output(a.out.as_deref(), &csv)
}

fn final_singular_values<T: Scalar>(problem: &Problem<T>, setup: &Setup, times: &[f64]) -> Result<Vec<f64>, CliError> {
    let reference = reference::obtain(problem, times, setup)?;
    let last = reference.snapshots.last().expect("two reference times");
    let m = matricize(last, 0)?;
    Ok(singular_values(&m).into_iter().map(real_to_f64::<T>).collect())
}
