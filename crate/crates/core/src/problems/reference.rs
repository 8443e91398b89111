use std::io::{Read, Write};

use super::Problem;
use crate::error::{Error, Result};
use crate::matrix::step_schedule;
use crate::ode::{integrate_adaptive, krylov_step};
use crate::scalar::{real, Scalar};
use crate::tensor::DenseArray;

/// Dense reference runs refuse problems with more entries than this.
pub const DEFAULT_MAX_DENSE_ENTRIES: usize = 1 << 24;

const MAGIC: &[u8; 4] = b"DLRT";
const VERSION: u8 = 1;

/// How a reference trajectory is produced.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ReferenceMethod {
    /// Adaptive Dormand–Prince 4(5), absolute and relative tolerance `tol`.
    Rk45Adaptive { tol: f64 },
    /// Krylov exponential of the full linear operator at fixed step `h`.
    ArnoldiFixed { h: f64, krylov_dim: usize },
    /// The problem's closed-form solution.
    Explicit,
}

/// Dense snapshots of a high-accuracy solution.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceSolution<T: Scalar> {
    pub times: Vec<f64>,
    pub snapshots: Vec<DenseArray<T>>,
    /// `None` when loaded from a file, which does not record the solver.
    pub method: Option<ReferenceMethod>,
}

/// Integrates the full problem from `t = 0` and records the state at `times`.
pub fn compute_reference<T: Scalar>(
    problem: &Problem<T>,
    times: &[f64],
    method: ReferenceMethod,
    max_entries: usize,
) -> Result<ReferenceSolution<T>> {
    let entries: usize = problem.dims.iter().product();
    if entries > max_entries {
        return Err(Error::TooLarge { entries, cap: max_entries });
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::Config("reference times must be nonnegative and increasing".into()));
    }
    let snapshots = match method {
        ReferenceMethod::Explicit => {
            let sol = problem
                .explicit_solution
                .as_ref()
                .ok_or_else(|| Error::Config(format!("{} has no closed-form solution", problem.experiment)))?;
            times.iter().map(|&t| sol(t)).collect()
        }
        ReferenceMethod::Rk45Adaptive { tol } => {
            if !(tol > 0.0) {
                return Err(Error::Config(format!("tolerance must be positive, got {tol}")));
            }
            integrate_adaptive(problem.rhs.as_ref(), 0.0, &problem.initial, times, tol, tol)?.0
        }
        ReferenceMethod::ArnoldiFixed { h, krylov_dim } => {
            if !(problem.flags.linear && problem.flags.autonomous) {
                return Err(Error::Config(format!("{} is not linear and autonomous", problem.experiment)));
            }
            if krylov_dim == 0 {
                return Err(Error::Config("Krylov dimension must be positive".into()));
            }
            let rhs = problem.rhs.as_ref();
            let mut y = problem.initial.clone();
            let mut t = 0.0;
            let mut out = Vec::with_capacity(times.len());
            for &target in times {
                let (full, rem) = step_schedule(t, target, h)?;
                for _ in 0..full {
                    y = krylov_step(rhs, real::<T>(0.0), real::<T>(h), &y, krylov_dim);
                }
                if rem > 0.0 {
                    y = krylov_step(rhs, real::<T>(0.0), real::<T>(rem), &y, krylov_dim);
                }
                t = target;
                out.push(y.clone());
            }
            out
        }
    };
    Ok(ReferenceSolution { times: times.to_vec(), snapshots, method: Some(method) })
}

impl<T: Scalar> ReferenceSolution<T> {
    /// Snapshot recorded at time `t` (to within `1e−12`).
    pub fn at(&self, t: f64) -> Option<&DenseArray<T>> {
        self.times.iter().position(|&s| (s - t).abs() <= 1e-12 * t.abs().max(1.0)).map(|k| &self.snapshots[k])
    }

    /// Binary layout (little-endian): `DLRT`, version byte, field byte
    /// (0 real, 1 complex), order `d` as u32, `d` extents as u64, snapshot
    /// count as u64, then per snapshot an f64 time and the entries as f64 in
    /// the array's linear order, complex values as interleaved `re, im`.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let dims = self.snapshots.first().map(|s| s.dims().to_vec()).unwrap_or_default();
        if self.snapshots.iter().any(|s| s.dims() != dims.as_slice()) || self.times.len() != self.snapshots.len() {
            return Err(Error::Format("snapshots must share extents and have one time each".into()));
        }
        w.write_all(MAGIC)?;
        w.write_all(&[VERSION, u8::from(T::IS_COMPLEX)])?;
        w.write_all(&(dims.len() as u32).to_le_bytes())?;
        for &n in &dims {
            w.write_all(&(n as u64).to_le_bytes())?;
        }
        w.write_all(&(self.snapshots.len() as u64).to_le_bytes())?;
        for (t, s) in self.times.iter().zip(&self.snapshots) {
            w.write_all(&t.to_le_bytes())?;
            for &x in s.data() {
                let (re, im) = x.to_re_im();
                w.write_all(&re.to_le_bytes())?;
                if T::IS_COMPLEX {
                    w.write_all(&im.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let mut head = [0u8; 2];
        r.read_exact(&mut head)?;
        if head[0] != VERSION {
            return Err(Error::Format(format!("unsupported version {}", head[0])));
        }
        match head[1] {
            0 | 1 if (head[1] == 1) == T::IS_COMPLEX => {}
            0 | 1 => return Err(Error::Format("scalar field does not match the requested type".into())),
            b => return Err(Error::Format(format!("unknown scalar field tag {b}"))),
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)?;
        let d = u32::from_le_bytes(b4) as usize;
        let mut dims = Vec::with_capacity(d);
        for _ in 0..d {
            r.read_exact(&mut b8)?;
            dims.push(usize::try_from(u64::from_le_bytes(b8)).map_err(|_| Error::Format("extent overflow".into()))?);
        }
        r.read_exact(&mut b8)?;
        let count = u64::from_le_bytes(b8) as usize;
        let len: usize = dims.iter().product();
        let mut f64_at = |r: &mut dyn Read| -> Result<f64> {
            r.read_exact(&mut b8)?;
            Ok(f64::from_le_bytes(b8))
        };
        let mut times = Vec::new();
        let mut snapshots = Vec::new();
        for _ in 0..count {
            times.push(f64_at(&mut r)?);
            let mut data = Vec::with_capacity(len);
            for _ in 0..len {
                let re = f64_at(&mut r)?;
                let im = if T::IS_COMPLEX { f64_at(&mut r)? } else { 0.0 };
                data.push(T::from_re_im(re, im));
            }
            snapshots.push(DenseArray::new(dims.clone(), data)?);
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(Error::Format("trailing bytes".into()));
        }
        Ok(Self { times, snapshots, method: None })
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file))
    }
}
