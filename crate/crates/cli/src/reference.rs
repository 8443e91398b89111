//! Reference solutions, optionally cached on disk.

use dlra::problems::{compute_reference, Problem, ReferenceSolution};
use dlra::{Real, Scalar};

use crate::setup::{CliError, Setup};

/// Reference snapshots at `times`, which must start at 0.
///
/// A cache file is reused only if it holds exactly these times and its
/// first snapshot equals the problem's initial value; the file format records
/// no problem parameters, so the initial value stands in for them.
pub fn obtain<T: Scalar>(problem: &Problem<T>, times: &[f64], setup: &Setup) -> Result<ReferenceSolution<T>, CliError> {
    debug_assert_eq!(times.first(), Some(&0.0));
    if let Some(path) = &setup.ref_cache {
        if path.exists() {
            match ReferenceSolution::<T>::load(path) {
                Ok(cached) if matches(&cached, problem, times) => return Ok(cached),
                Ok(_) => eprintln!("warning: {} does not match this problem; recomputing", path.display()),
                Err(e) => eprintln!("warning: ignoring unreadable cache {}: {e}", path.display()),
            }
        }
    }
    let reference = compute_reference(problem, times, setup.reference, setup.max_dense_entries)?;
    if let Some(path) = &setup.ref_cache {
        reference.save(path)?;
    }
    Ok(reference)
}

fn matches<T: Scalar>(cached: &ReferenceSolution<T>, problem: &Problem<T>, times: &[f64]) -> bool {
    if cached.times.len() != times.len() || cached.times.iter().zip(times).any(|(a, b)| (a - b).abs() > 1e-12 * b.abs().max(1.0)) {
        return false;
    }
    let first = &cached.snapshots[0];
    if first.dims() != problem.initial.dims() {
        return false;
    }
    let scale = problem.initial.frobenius_norm();
    let tol: Real<T> = dlra::scalar::real::<T>(1e-12);
    first.sub(&problem.initial).frobenius_norm() <= tol * scale
}
