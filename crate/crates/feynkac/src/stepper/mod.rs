//! Fully discrete time marching: Galerkin schemes I and II, the forward
//! model, the 2D tensor scheme and cubic collocation, plus error norms.

mod colloc;
mod errors;
mod galerkin;
mod plane;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::bspline::SplineError;
use crate::fracassembly::AssemblyError;
use crate::fracweights::{TimeGrid, TimeScheme, WeightError};
use crate::linalg::LinalgError;
use crate::problem::{CaseName, ProblemError, ProblemSpec};
use crate::C64;

pub use colloc::run_collocation;
pub use errors::{compute_errors, ErrorNorms};
pub use galerkin::{march_constant, run_forward, run_scheme_i, run_scheme_ii, Operators1d};
pub use plane::run_2d;

/// Wall clock for the marching loop; reads zero where no clock exists (wasm32).
pub(crate) struct Stopwatch {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Stopwatch {
    pub(crate) fn start() -> Self {
        Stopwatch {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    pub(crate) fn seconds(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        return self.start.elapsed().as_secs_f64();
        #[cfg(target_arch = "wasm32")]
        0.0
    }
}

#[derive(Debug, Error)]
pub enum StepError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Spline(#[from] SplineError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Weights(#[from] WeightError),
    #[error("incompatible discretization: {0}")]
    Incompatible(String),
    #[error("unsupported combination: {0}")]
    Unsupported(String),
    #[error("iterative solver stalled at step {step}: relative residual {residual:.3e}")]
    NotConverged { step: usize, residual: f64 },
    #[error("history cache needs about {mib} MiB; try a smaller J or N")]
    Resource { mib: usize },
}

/// Which equation is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    /// Backward equation with the Riemann-Liouville substantial derivative.
    I,
    /// Caputo form.
    II,
    Forward,
    Colloc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scheme {
    pub form: Form,
    pub time: TimeScheme,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let form = match self.form {
            Form::I => "I",
            Form::II => "II",
            Form::Forward => "FWD",
            Form::Colloc => "COLLOC",
        };
        let time = match self.time {
            TimeScheme::Fbdf => "FBDF",
            TimeScheme::Pi => "PI",
        };
        write!(f, "{form}-{time}")
    }
}

impl FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let up = s.to_ascii_uppercase();
        let (form, time) = up.split_once('-').ok_or_else(|| format!("bad scheme '{s}'"))?;
        let form = match form {
            "I" => Form::I,
            "II" => Form::II,
            "FWD" => Form::Forward,
            "COLLOC" => Form::Colloc,
            _ => return Err(format!("bad scheme '{s}'; use I|II|FWD|COLLOC-FBDF|PI")),
        };
        let time = match time {
            "FBDF" => TimeScheme::Fbdf,
            "PI" => TimeScheme::Pi,
            _ => return Err(format!("bad time rule in '{s}'; use FBDF or PI")),
        };
        if form == Form::Colloc && time != TimeScheme::Pi {
            return Err("collocation uses PI weights only".into());
        }
        Ok(Scheme { form, time })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Direct,
    Gmres,
    Bicgstab,
}

impl FromStr for SolverKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "direct" | "gauss" => Ok(SolverKind::Direct),
            "gmres" => Ok(SolverKind::Gmres),
            "bicgstab" => Ok(SolverKind::Bicgstab),
            _ => Err(format!("unknown solver '{s}'; use direct, gmres or bicgstab")),
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::Direct => "direct",
            SolverKind::Gmres => "gmres",
            SolverKind::Bicgstab => "bicgstab",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialData {
    L2Projection,
    Interpolation,
}

#[derive(Debug, Clone)]
pub struct Discretization {
    pub d: usize,
    pub level: usize,
    pub coarsest: usize,
    pub grid: TimeGrid,
    pub scheme: Scheme,
    pub solver: SolverKind,
    pub precond: bool,
    pub tol: f64,
    pub restart: usize,
    pub maxiter: usize,
    pub initial: InitialData,
    pub keep_history: bool,
}

impl Discretization {
    pub fn new(d: usize, level: usize, grid: TimeGrid, scheme: Scheme) -> Self {
        let colloc = scheme.form == Form::Colloc;
        Discretization {
            d,
            level,
            coarsest: if d == 4 { 2 } else { 1 },
            grid,
            scheme,
            solver: SolverKind::Direct,
            precond: false,
            tol: 1e-8,
            restart: 30,
            maxiter: 20_000,
            initial: if colloc { InitialData::Interpolation } else { InitialData::L2Projection },
            keep_history: false,
        }
    }

    fn check(&self) -> Result<(), StepError> {
        let colloc = self.scheme.form == Form::Colloc;
        if colloc && self.d != 4 {
            return Err(StepError::Incompatible(format!("collocation needs d = 4, got d = {}", self.d)));
        }
        if !colloc && !(self.d == 2 || self.d == 3) {
            return Err(StepError::Incompatible(format!("Galerkin schemes need d in {{2, 3}}, got d = {}", self.d)));
        }
        if self.scheme.time == TimeScheme::Fbdf && !self.grid.is_uniform() {
            return Err(StepError::Incompatible("FBDF needs a uniform time grid".into()));
        }
        Ok(())
    }

    /// Nominal step `T / N`.
    pub fn tau(&self) -> f64 {
        self.grid.t(self.grid.steps()) / self.grid.steps() as f64
    }
}

/// Outcome of one run.
#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Final coefficients (2D: column-major `n x n`).
    pub coeffs: Vec<C64>,
    pub history: Option<Vec<Vec<C64>>>,
    pub err2: f64,
    /// `NaN` where the energy norm is not defined (collocation).
    pub err1: f64,
    pub maxerr: f64,
    /// Krylov iterations per step (empty for direct solves).
    pub iters: Vec<f64>,
    /// Wall time of the marching loop.
    pub cpu_s: f64,
}

impl SolveReport {
    pub fn mean_iters(&self) -> f64 {
        if self.iters.is_empty() {
            0.0
        } else {
            self.iters.iter().sum::<f64>() / self.iters.len() as f64
        }
    }
}

/// Run the scheme selected by `disc` on `problem`.
pub fn run(problem: &ProblemSpec, disc: &Discretization) -> Result<SolveReport, StepError> {
    disc.check()?;
    if problem.name() == CaseName::Ex42 {
        if disc.scheme.form != Form::II {
            return Err(StepError::Unsupported("the 2D case is solved in Caputo form (II-FBDF or II-PI)".into()));
        }
        return run_2d(problem, disc);
    }
    match disc.scheme.form {
        Form::I => run_scheme_i(problem, disc),
        Form::II => run_scheme_ii(problem, disc),
        Form::Forward => run_forward(problem, disc),
        Form::Colloc => run_collocation(problem, disc),
    }
}

/// `y = A x` for real `A` and complex `x`.
pub(crate) fn real_matvec(a: &DMatrix<f64>, x: &[C64]) -> Vec<C64> {
    let mut y = vec![C64::new(0.0, 0.0); a.nrows()];
    for (j, xj) in x.iter().enumerate() {
        if xj.re == 0.0 && xj.im == 0.0 {
            continue;
        }
        for (yi, aij) in y.iter_mut().zip(a.column(j).iter()) {
            *yi += xj * *aij;
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scheme_names_round_trip() {
        for s in ["I-FBDF", "I-PI", "II-FBDF", "II-PI", "FWD-FBDF", "FWD-PI", "COLLOC-PI"] {
            assert_eq!(s.parse::<Scheme>().unwrap().to_string(), s);
        }
        assert!("COLLOC-FBDF".parse::<Scheme>().is_err());
        assert!("III-PI".parse::<Scheme>().is_err());
    }
}
