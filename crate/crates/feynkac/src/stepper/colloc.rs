//! Cubic spline collocation with PI time weights.


use nalgebra::DMatrix;

use super::errors::{compute_errors, project};
use super::{real_matvec, Discretization, InitialData, SolveReport, StepError, Stopwatch};
use crate::bspline::SplineSpace;
use crate::fracassembly::{colloc_matrices, colloc_points, mass_1d, riesz_factor};
use crate::fracweights::{fbdf_q, pi_q_uniform, TimeScheme};
use crate::linalg::RealLu;
use crate::problem::{ForcingForm, ProblemSpec};
use crate::C64;

/// Collocation at `1/2^{J+1}, k/2^J, 1 - 1/2^{J+1}` of the backward
/// equation; the potential enters through per-point decay factors.
pub fn run_collocation(problem: &ProblemSpec, disc: &Discretization) -> Result<SolveReport, StepError> {
    disc.check()?;
    let tau = disc
        .grid
        .tau()
        .ok_or_else(|| StepError::Unsupported("collocation needs a uniform time grid".into()))?;
    let space = SplineSpace::new(4, disc.level, disc.coarsest.max(2))?;
    let (al, ar, e) = colloc_matrices(&space, problem.alpha)?;
    let a: DMatrix<f64> = (al + ar) * riesz_factor(problem.alpha, problem.k);
    let pts = colloc_points(disc.level);
    let g = 1.0 - problem.gamma;
    let table = match disc.scheme.time {
        TimeScheme::Pi => pi_q_uniform(g, &disc.grid)?,
        TimeScheme::Fbdf => fbdf_q(g, &disc.grid)?,
    };
    let q0 = table.q[0];
    let two_step = disc.scheme.time == TimeScheme::Pi;
    let lu1 = RealLu::new(&e * (1.0 / tau) - &a * q0)?;
    let lu2 = if two_step { Some(RealLu::new(&e * (1.5 / tau) - &a * q0)?) } else { None };
    let z: Vec<C64> = pts.iter().map(|&x| (-problem.p * problem.potential.eval(x) * tau).exp()).collect();
    let g0 = match disc.initial {
        InitialData::Interpolation => {
            let vals: Vec<C64> = pts.iter().map(|&x| problem.initial(x)).collect();
            RealLu::new(e.clone())?.solve(&vals)
        }
        InitialData::L2Projection => project(&space, &mass_1d(&space).to_dense(), |x| problem.initial(x))?,
    };
    let steps = disc.grid.steps();
    let mut forcing = Vec::with_capacity(steps);
    for n in 1..=steps {
        let f = problem.forcing(ForcingForm::Backward, disc.grid.t(n))?;
        forcing.push(pts.iter().map(|&x| f.eval(x)).collect::<Vec<C64>>());
    }

    let start = Stopwatch::start();
    let np = pts.len();
    let mut eg = vec![real_matvec(&e, &g0)];
    let mut ag = vec![real_matvec(&a, &g0)];
    let mut last = g0;
    for n in 1..=steps {
        let mut rhs = std::mem::take(&mut forcing[n - 1]);
        let mut zl = vec![C64::new(1.0, 0.0); np];
        for l in 1..=n {
            let c = if l < n { table.q_diff(l) } else { table.l[n] - table.q[n - 1] };
            let v = &ag[n - l];
            for i in 0..np {
                zl[i] *= z[i];
                rhs[i] += zl[i] * c * v[i];
            }
        }
        let second = two_step && n >= 2;
        for i in 0..np {
            let h1 = if second {
                (z[i] * eg[n - 1][i] * -2.0 + z[i] * z[i] * eg[n - 2][i] * 0.5) / tau
            } else {
                -z[i] * eg[n - 1][i] / tau
            };
            rhs[i] -= h1;
        }
        let lu = if second { lu2.as_ref().expect("two-step factor") } else { &lu1 };
        let x = lu.solve(&rhs);
        eg.push(real_matvec(&e, &x));
        ag.push(real_matvec(&a, &x));
        last = x;
    }
    let cpu_s = start.seconds();
    let norms = compute_errors(problem, &space, &last, disc.grid.t(steps), None);
    Ok(SolveReport {
        coeffs: last,
        history: None,
        err2: norms.err2,
        err1: f64::NAN,
        maxerr: norms.maxerr,
        iters: Vec::new(),
        cpu_s,
    })
}
