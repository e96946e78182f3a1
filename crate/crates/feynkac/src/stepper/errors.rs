use nalgebra::DMatrix;

use super::{Form, StepError};
use crate::bspline::SplineSpace;
use crate::fracassembly::{mass_1d, riesz_factor, stiffness_1d, NodeBasis};
use crate::linalg::{BandLu, LinOp, RealLu};
use crate::problem::ProblemSpec;
use crate::special::gamma;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    pub err2: f64,
    pub err1: f64,
    pub maxerr: f64,
}

/// L2 projection of `f` onto the spline space.
pub(crate) fn project(space: &SplineSpace, mass: &DMatrix<f64>, f: impl Fn(f64) -> C64) -> Result<Vec<C64>, StepError> {
    let nodes = NodeBasis::legendre(space, space.d + 6);
    let load = nodes.load(f);
    Ok(RealLu::new(mass.clone())?.solve(&load))
}

/// Weight of the energy term in Err-1.
pub(crate) fn energy_weight(form: Form, gamma_: f64, tau: f64) -> f64 {
    match form {
        Form::I | Form::Forward => 2.0 * tau.powf(gamma_) / gamma(1.0 + gamma_),
        Form::II => 2.0 * tau.powf(gamma_) * gamma(2.0 - gamma_),
        Form::Colloc => 0.0,
    }
}

/// Number of uniform samples used for the max norm.
pub(crate) fn sample_count(space: &SplineSpace) -> usize {
    10 * space.cells()
}

/// Levels added above the discrete one to resolve the exact solution in the
/// energy term, and the cap on the resulting level.
const ENERGY_EXTRA_LEVELS: usize = 3;
const ENERGY_MAX_LEVEL: usize = 12;

/// `B(u - u_h, u - u_h)` with both functions projected onto a finer level.
/// The projection of `u_h` is exact since the spaces are nested.
pub(crate) fn energy_of_error(problem: &ProblemSpec, space: &SplineSpace, coeffs: &[C64], t: f64) -> Result<f64, StepError> {
    let level = (space.level + ENERGY_EXTRA_LEVELS).min(ENERGY_MAX_LEVEL).max(space.level);
    let fine = SplineSpace::new(space.d, level, space.coarsest)?;
    let nodes = NodeBasis::legendre(&fine, fine.d + 6);
    let load = nodes.load(|x| problem.exact(x, t) - space.combine(coeffs, x));
    let e = BandLu::from_banded(&mass_1d(&fine)).solve(&load);
    let (s, _) = stiffness_1d(&fine, problem.alpha)?;
    let mut se = vec![C64::new(0.0, 0.0); e.len()];
    s.apply(&e, &mut se);
    let b: f64 = e.iter().zip(&se).map(|(a, b)| (a.conj() * b).re).sum();
    Ok(2.0 * riesz_factor(problem.alpha, problem.k) * b)
}

/// Err-2 by per-cell Gauss quadrature, maxErr on `10·2^J` uniform samples
/// and, given the weight, Err-1 = sqrt(Err-2² + weight · B(u - u_h, u - u_h)).
pub fn compute_errors(problem: &ProblemSpec, space: &SplineSpace, coeffs: &[C64], t: f64, energy_weight: Option<f64>) -> ErrorNorms {
    let nodes = NodeBasis::legendre(space, space.d + 6);
    let vals = nodes.eval(coeffs);
    let err2 = nodes
        .nodes
        .iter()
        .zip(&nodes.weights)
        .zip(&vals)
        .map(|((&x, &w), v)| w * (v - problem.exact(x, t)).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let m = sample_count(space);
    let maxerr = (0..=m)
        .map(|k| {
            let x = k as f64 / m as f64;
            (space.combine(coeffs, x) - problem.exact(x, t)).norm()
        })
        .fold(0.0, f64::max);
    let err1 = match energy_weight.map(|w| (w, energy_of_error(problem, space, coeffs, t))) {
        Some((w, Ok(b))) => (err2 * err2 + w * b.max(0.0)).sqrt(),
        _ => f64::NAN,
    };
    ErrorNorms { err2, err1, maxerr }
}
