//! Two-dimensional tensor-product scheme on the unit square.


use nalgebra::DMatrix;

use super::errors::{energy_weight, sample_count};
use super::galerkin::Loader;
use super::{Discretization, Form, SolveReport, SolverKind, StepError, Stopwatch};
use crate::bspline::{Fwt, SplineSpace};
use crate::fracassembly::{mass_1d, stiffness_1d, NodeBasis};
use crate::fracweights::{fbdf_q, pi_q_uniform, TimeScheme};
use crate::linalg::{
    bicgstab, gmres_restarted, kron2_apply, Banded, KrylovResult, LinOp, PrecondOp, QuasiToeplitzOp, RealLu, Scalar,
    SylvesterOp, WaveletPrecond,
};
use crate::problem::{monomial_factor, ProblemSpec, Side};
use crate::C64;

struct Plane {
    space: SplineSpace,
    mass: Banded,
    stiff: QuasiToeplitzOp,
    /// loads of the spatial factors and of their left derivatives
    lx: Vec<f64>,
    ly: Vec<f64>,
    dlx: Vec<f64>,
    dly: Vec<f64>,
}

impl Plane {
    fn new(problem: &ProblemSpec, disc: &Discretization) -> Result<Self, StepError> {
        let space = SplineSpace::new(disc.d, disc.level, disc.coarsest)?;
        let mass = mass_1d(&space);
        let (stiff, _) = stiffness_1d(&space, problem.alpha)?;
        let loader = Loader::new(&space);
        let nodes = NodeBasis::legendre(&space, disc.d + 4);
        let (fx, fy) = ProblemSpec::forcing_2d_factors();
        let poly = |terms: &[(f64, f64)]| nodes.load(|x| terms.iter().map(|(c, m)| c * x.powf(*m)).sum::<f64>());
        let frac = |terms: &[(f64, f64)]| {
            let mut out = vec![0.0; space.dim()];
            for (c, m) in terms {
                let f = monomial_factor(*m, problem.alpha);
                if f != 0.0 {
                    loader.load_power(c * f, m - problem.alpha, Side::Left, &mut out);
                }
            }
            out
        };
        let (lx, ly, dlx, dly) = (poly(&fx), poly(&fy), frac(&fx), frac(&fy));
        Ok(Plane { space, mass, stiff, lx, ly, dlx, dly })
    }

    fn dim(&self) -> usize {
        self.space.dim()
    }

    /// `a X Y + b (D X · Y + X · D Y)` tested against the tensor basis.
    fn load<T: Scalar>(&self, a: T, b: T) -> DMatrix<T> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| {
            a * (self.lx[i] * self.ly[j]) + b * (self.dlx[i] * self.ly[j] + self.lx[i] * self.dly[j])
        })
    }
}

enum Linear<'a> {
    Dense(RealLu),
    Krylov { op: SylvesterOp<'a>, kind: SolverKind },
    Wavelet { op: &'a SylvesterOp<'a>, pre: &'a WaveletPrecond, d: DMatrix<f64>, kind: SolverKind },
}

fn krylov<T: Scalar>(
    op: &dyn LinOp<T>,
    kind: SolverKind,
    b: &[T],
    x0: &[T],
    disc: &Discretization,
) -> KrylovResult<T> {
    match kind {
        SolverKind::Bicgstab => bicgstab(op, b, x0, disc.tol, disc.maxiter),
        _ => gmres_restarted(op, b, x0, disc.restart, disc.tol, disc.maxiter),
    }
}

fn march<T: Scalar>(
    problem: &ProblemSpec,
    disc: &Discretization,
    plane: &Plane,
) -> Result<(Vec<C64>, Vec<f64>, f64), StepError> {
    let n = plane.dim();
    let grid = &disc.grid;
    let tau = grid
        .tau()
        .ok_or_else(|| StepError::Unsupported("the 2D scheme needs a uniform time grid".into()))?;
    let table = match disc.scheme.time {
        TimeScheme::Fbdf => fbdf_q(problem.gamma, grid)?,
        TimeScheme::Pi => pi_q_uniform(problem.gamma, grid)?,
    };
    let k = problem.k;
    let q0 = table.q[0] / k;
    let pu = T::from_c64(problem.p * problem.potential.constant().unwrap_or(1.0));
    let e = (-pu * tau).exp();
    let steps = grid.steps();
    let mut epow = vec![T::one()];
    for l in 1..=steps {
        let prev = epow[l - 1];
        epow.push(prev * e);
    }

    let op = SylvesterOp { q0, mass: &plane.mass, stiff: &plane.stiff };
    let pre;
    let linear = match (disc.solver, disc.precond) {
        (SolverKind::Direct, _) => {
            let md = plane.mass.to_dense();
            let sd = plane.stiff.to_dense();
            let full = md.kronecker(&md) * q0 + md.kronecker(&sd) + sd.kronecker(&md);
            Linear::Dense(RealLu::new(full)?)
        }
        (kind, false) => Linear::Krylov { op: SylvesterOp { q0, mass: &plane.mass, stiff: &plane.stiff }, kind },
        (kind, true) => {
            if disc.d != 2 {
                return Err(StepError::Incompatible("wavelet preconditioning is available for d = 2".into()));
            }
            pre = WaveletPrecond::new(Fwt::new(2, disc.coarsest, disc.level)?, &plane.mass, &plane.stiff)?;
            let d = pre.scaling(q0)?;
            Linear::Wavelet { op: &op, pre: &pre, d, kind }
        }
    };

    let loads: Vec<DMatrix<T>> = (1..=steps)
        .map(|s| {
            let (a, b) = problem.forcing_2d_coefs(grid.t(s));
            plane.load(T::from_c64(a / k), T::from_c64(b / k))
        })
        .collect();
    let x0: Vec<T> = {
        let c = T::from_c64(problem.exact_2d_time(0.0));
        let m = plane.mass.to_dense();
        let lu = RealLu::new(m)?;
        let (px, py) = (lu.solve(&to_t::<T>(&plane.lx)), lu.solve(&to_t::<T>(&plane.ly)));
        DMatrix::from_fn(n, n, |i, j| c * px[i] * py[j]).as_slice().to_vec()
    };

    let start = Stopwatch::start();
    let mut hist: Vec<Vec<T>> = vec![x0];
    let mut iters = Vec::new();
    let mut y_prev = vec![T::zero(); n * n];
    for step in 1..=steps {
        let mut h = vec![T::zero(); n * n];
        for l in 1..step {
            let c = epow[l] * table.q_diff(l);
            for (a, b) in h.iter_mut().zip(&hist[step - l]) {
                *a += c * *b;
            }
        }
        let c = epow[step] * (-table.q[step - 1]);
        for (a, b) in h.iter_mut().zip(&hist[0]) {
            *a += c * *b;
        }
        let mhm = kron2_apply(&plane.mass, &plane.mass, &h)?;
        let mut rhs = loads[step - 1].as_slice().to_vec();
        for (r, v) in rhs.iter_mut().zip(mhm) {
            *r -= v * (1.0 / k);
        }
        let prev = hist.last().expect("nonempty");
        let x = match &linear {
            Linear::Dense(lu) => lu.solve(&rhs),
            Linear::Krylov { op, kind } => {
                let r = krylov(op, *kind, &rhs, prev, disc);
                if !r.converged {
                    return Err(StepError::NotConverged { step, residual: r.rel_residual });
                }
                iters.push(r.iters);
                r.x
            }
            Linear::Wavelet { op, pre, d, kind } => {
                let pop = PrecondOp { op, pre, d: d.clone() };
                let b = pre.to_multi(d, &DMatrix::from_column_slice(n, n, &rhs));
                let r = krylov(&pop, *kind, b.as_slice(), &y_prev, disc);
                if !r.converged {
                    return Err(StepError::NotConverged { step, residual: r.rel_residual });
                }
                iters.push(r.iters);
                let x = pre.to_single(d, &DMatrix::from_column_slice(n, n, &r.x));
                y_prev = r.x;
                x.as_slice().to_vec()
            }
        };
        hist.push(x);
    }
    let cpu = start.seconds();
    let last = hist.pop().expect("nonempty").iter().map(|v| v.to_c64()).collect();
    Ok((last, iters, cpu))
}

fn to_t<T: Scalar>(v: &[f64]) -> Vec<T> {
    v.iter().map(|x| T::from_real(*x)).collect()
}

/// Basis values at `points` as a dense `points x dim` matrix.
fn basis_at(space: &SplineSpace, points: &[f64]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(points.len(), space.dim());
    let cells = space.cells();
    for (r, &x) in points.iter().enumerate() {
        let c = ((x * cells as f64).floor() as usize).min(cells - 1);
        for i in space.active_on_cell(c) {
            out[(r, i)] = space.eval(i, x);
        }
    }
    out
}

/// The 2D scheme in Caputo form; dense, GMRES or Bi-CGSTAB solves with
/// optional wavelet preconditioning.
pub fn run_2d(problem: &ProblemSpec, disc: &Discretization) -> Result<SolveReport, StepError> {
    disc.check()?;
    if problem.potential.constant().is_none() {
        return Err(StepError::Unsupported("the 2D scheme needs a constant potential".into()));
    }
    if disc.scheme.form != Form::II {
        return Err(StepError::Unsupported("the 2D case is solved in Caputo form".into()));
    }
    let plane = Plane::new(problem, disc)?;
    let pu = problem.p * problem.potential.constant().unwrap_or(1.0);
    let (coeffs, iters, cpu_s) =
        if pu.im == 0.0 { march::<f64>(problem, disc, &plane)? } else { march::<C64>(problem, disc, &plane)? };

    let n = plane.dim();
    let t_end = disc.grid.t(disc.grid.steps());
    let x = DMatrix::from_column_slice(n, n, &coeffs);
    let c = problem.exact_2d_time(t_end);
    let (fx, fy) = ProblemSpec::forcing_2d_factors();
    let fxv = |x: f64| fx.iter().map(|(a, m)| a * x.powf(*m)).sum::<f64>();
    let fyv = |y: f64| fy.iter().map(|(a, m)| a * y.powf(*m)).sum::<f64>();

    let nodes = NodeBasis::legendre(&plane.space, disc.d + 6);
    let v = basis_at(&plane.space, &nodes.nodes).map(|a| C64::new(a, 0.0));
    let g = &v * &x * v.transpose();
    let mut err2 = 0.0;
    for (qi, (&xi, &wi)) in nodes.nodes.iter().zip(&nodes.weights).enumerate() {
        for (qj, (&yj, &wj)) in nodes.nodes.iter().zip(&nodes.weights).enumerate() {
            err2 += wi * wj * (g[(qi, qj)] - c * (fxv(xi) * fyv(yj))).norm_sqr();
        }
    }
    let err2 = err2.sqrt();

    let m = sample_count(&plane.space);
    let pts: Vec<f64> = (0..=m).map(|k| k as f64 / m as f64).collect();
    let s = basis_at(&plane.space, &pts).map(|a| C64::new(a, 0.0));
    let gs = &s * &x * s.transpose();
    let mut maxerr: f64 = 0.0;
    for (i, &xi) in pts.iter().enumerate() {
        for (j, &yj) in pts.iter().enumerate() {
            maxerr = maxerr.max((gs[(i, j)] - c * (fxv(xi) * fyv(yj))).norm());
        }
    }

    let lu = RealLu::new(plane.mass.to_dense())?;
    let (px, py): (Vec<C64>, Vec<C64>) = (lu.solve(&to_t::<C64>(&plane.lx)), lu.solve(&to_t::<C64>(&plane.ly)));
    let e = DMatrix::from_fn(n, n, |i, j| c * px[i] * py[j] - x[(i, j)]);
    let energy = SylvesterOp { q0: 0.0, mass: &plane.mass, stiff: &plane.stiff }.apply_mat(&e);
    let b: f64 = e.iter().zip(energy.iter()).map(|(a, b)| (a.conj() * b).re).sum::<f64>() * problem.k;
    let w = energy_weight(Form::II, problem.gamma, disc.tau());
    let err1 = (err2 * err2 + w * b.max(0.0)).sqrt();

    Ok(SolveReport { coeffs, history: None, err2, err1, maxerr, iters, cpu_s })
}
