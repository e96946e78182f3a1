//! Fractional derivatives of the spline bases and the Galerkin / collocation
//! matrices built from them.
//!
//! Sign convention: `S[i][j] = (₀D^{α-1} φ_j, φ_i')`. The symmetric part
//! `S + S^T` is positive definite and equals the bilinear form of
//! `-(₀D^α + ₓD^α)`; at α = 2 it is twice the Laplacian stiffness.

use std::cell::RefCell;
use std::collections::HashMap;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::bspline::{SplineError, SplineSpace, Variant};
use crate::bspline::PowerTerm;
use crate::linalg::{Banded, QuasiToeplitzOp, Scalar};
use crate::quadrature::{gauss_jacobi, gauss_legendre};
use crate::C64;

#[derive(Debug, Error, PartialEq)]
pub enum AssemblyError {
    #[error(transparent)]
    Spline(#[from] SplineError),
    #[error("Galerkin stiffness needs d = 2 or 3 (got {0}); d = 4 is collocation only")]
    GalerkinOrder(usize),
    #[error("collocation needs d = 4 (got {0})")]
    CollocationOrder(usize),
    #[error("fractional order {0} outside (1, 2]")]
    BadAlpha(f64),
}

/// `₀D^{α-1}` of an unscaled shape at `y`.
pub fn frac_deriv_basis(d: usize, variant: Variant, alpha: f64, y: f64) -> Result<f64, AssemblyError> {
    let shape = crate::bspline::base_shape(d, variant)?;
    Ok(shape.frac_terms(alpha - 1.0).iter().map(|t| t.eval(y)).sum())
}

/// Left Riemann-Liouville derivatives of order `mu` of every level-J basis
/// function in closed form; right derivatives by reflection.
#[derive(Debug, Clone)]
pub struct FracDerivs {
    pub space: SplineSpace,
    pub mu: f64,
    terms: Vec<(Variant, Vec<PowerTerm>)>,
    scale: f64,
}

impl FracDerivs {
    pub fn new(space: &SplineSpace, mu: f64) -> Self {
        let mut terms: Vec<(Variant, Vec<PowerTerm>)> = Vec::new();
        for f in &space.funcs {
            if !terms.iter().any(|(v, _)| *v == f.variant) {
                terms.push((f.variant, space.shape(f.variant).frac_terms(mu)));
            }
        }
        let h = space.cells() as f64;
        FracDerivs { space: space.clone(), mu, terms, scale: h.powf(mu + 0.5) }
    }

    pub fn terms_of(&self, i: usize) -> &[PowerTerm] {
        let v = self.space.funcs[i].variant;
        &self.terms.iter().find(|(w, _)| *w == v).expect("variant present").1
    }

    /// `2^{J(mu+1/2)}` level scaling.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `₀D_x^mu φ_i(x)`.
    pub fn left(&self, i: usize, x: f64) -> f64 {
        let y = self.space.cells() as f64 * x - self.space.funcs[i].shift as f64;
        self.scale * self.terms_of(i).iter().map(|t| t.eval(y)).sum::<f64>()
    }

    /// `ₓD_1^mu φ_i(x)`.
    pub fn right(&self, i: usize, x: f64) -> f64 {
        self.left(self.space.dim() - 1 - i, 1.0 - x)
    }
}

/// `∫_0^1 (s + δ)^e P(s) ds` for integer `δ >= 0` and cubic `P`.
#[derive(Debug, Default)]
pub struct PowerIntegrator {
    jacobi: RefCell<HashMap<u64, (Vec<f64>, Vec<f64>)>>,
    legendre: (Vec<f64>, Vec<f64>),
}

impl PowerIntegrator {
    pub fn new() -> Self {
        PowerIntegrator { jacobi: RefCell::new(HashMap::new()), legendre: gauss_legendre(16).unit_interval() }
    }

    fn with_jacobi<R>(&self, e: f64, f: impl FnOnce(&[f64], &[f64]) -> R) -> R {
        let mut cache = self.jacobi.borrow_mut();
        let rule = cache
            .entry(e.to_bits())
            .or_insert_with(|| gauss_jacobi(4, 0.0, e).expect("exponent above -1").unit_interval());
        f(&rule.0, &rule.1)
    }

    pub fn integrate(&self, delta: f64, e: f64, poly: &[f64; 4]) -> f64 {
        let p = |s: f64| ((poly[3] * s + poly[2]) * s + poly[1]) * s + poly[0];
        if delta == 0.0 {
            self.with_jacobi(e, |x, w| x.iter().zip(w).map(|(s, wi)| wi * p(*s)).sum())
        } else {
            let (x, w) = &self.legendre;
            x.iter().zip(w).map(|(s, wi)| wi * (s + delta).powf(e) * p(*s)).sum()
        }
    }
}

fn check_alpha(alpha: f64) -> Result<(), AssemblyError> {
    if alpha > 1.0 && alpha <= 2.0 {
        Ok(())
    } else {
        Err(AssemblyError::BadAlpha(alpha))
    }
}

/// Exact entry `S[i][j] = (₀D^{α-1} φ_j, φ_i')`.
pub fn stiffness_entry(fd: &FracDerivs, pi: &PowerIntegrator, i: usize, j: usize) -> f64 {
    let space = &fd.space;
    let (a, b) = space.cell_range(i);
    let si = space.funcs[i].shift;
    let sj = space.funcs[j].shift as f64;
    let shape_i = space.shape_of(i);
    let mut acc = 0.0;
    for c in a..b {
        let dpoly = shape_i.cell_deriv(c - si);
        for t in fd.terms_of(j) {
            let delta = c as f64 - sj - t.knot;
            if delta < 0.0 {
                continue;
            }
            acc += t.coef * pi.integrate(delta, t.power, &dpoly);
        }
    }
    acc * (space.cells() as f64).powf(fd.mu + 1.0)
}

/// Left stiffness `S` and its transpose as quasi-Toeplitz operators. Only the
/// Toeplitz core's first row and column plus the border are computed.
pub fn stiffness_1d(space: &SplineSpace, alpha: f64) -> Result<(QuasiToeplitzOp, QuasiToeplitzOp), AssemblyError> {
    check_alpha(alpha)?;
    let border = match space.d {
        2 => 0,
        3 => 1,
        d => return Err(AssemblyError::GalerkinOrder(d)),
    };
    let fd = FracDerivs::new(space, alpha - 1.0);
    let pi = PowerIntegrator::new();
    let left = QuasiToeplitzOp::from_entries(space.dim(), border, |i, j| stiffness_entry(&fd, &pi, i, j));
    let right = left.transpose();
    Ok((left, right))
}

/// `K (S + S^T) / (-2 cos(απ/2))`: the Galerkin matrix of `-K ∇^α`.
pub fn riesz_matrix(left: &QuasiToeplitzOp, alpha: f64, k: f64) -> DMatrix<f64> {
    let s = left.to_dense();
    (&s + s.transpose()) * riesz_factor(alpha, k)
}

/// `K / (-2 cos(απ/2))`.
pub fn riesz_factor(alpha: f64, k: f64) -> f64 {
    k / (-2.0 * (alpha * std::f64::consts::FRAC_PI_2).cos())
}

/// Mass matrix, exact (Gauss-Legendre with enough points per cell).
pub fn mass_1d(space: &SplineSpace) -> Banded {
    let n = space.dim();
    let bw = space.d;
    let mut m = Banded::zeros(n, bw, bw);
    let (x, w) = gauss_legendre(space.d + 1).unit_interval();
    let h = 1.0 / space.cells() as f64;
    for c in 0..space.cells() {
        let act: Vec<usize> = space.active_on_cell(c).collect();
        for (s, wq) in x.iter().zip(&w) {
            let xx = (c as f64 + s) * h;
            let vals: Vec<f64> = act.iter().map(|&i| space.eval(i, xx)).collect();
            for (a, &i) in act.iter().enumerate() {
                for (b, &j) in act.iter().enumerate().skip(a) {
                    let v = wq * h * vals[a] * vals[b];
                    m.add(i, j, v);
                    if i != j {
                        m.add(j, i, v);
                    }
                }
            }
        }
    }
    m
}

/// Mass matrix with a (complex) weight, dense.
pub fn weighted_mass(space: &SplineSpace, weight: impl Fn(f64) -> C64) -> DMatrix<C64> {
    let nb = NodeBasis::legendre(space, 8);
    let n = space.dim();
    let mut out = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    for q in 0..nb.len() {
        let wq = weight(nb.nodes[q]) * nb.weights[q];
        for (a, &i) in nb.active(q).iter().enumerate() {
            for (b, &j) in nb.active(q).iter().enumerate() {
                out[(i, j)] += wq * nb.val(q, a) * nb.val(q, b);
            }
        }
    }
    out
}

/// Basis values and derivatives tabulated at per-cell quadrature nodes.
#[derive(Debug, Clone)]
pub struct NodeBasis {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    per_cell: usize,
    cell_funcs: Vec<Vec<usize>>,
    vals: Vec<Vec<f64>>,
    ders: Vec<Vec<f64>>,
    dim: usize,
}

impl NodeBasis {
    /// Nodes `local` on every cell, with per-node weights on the unit cell.
    pub fn from_local(space: &SplineSpace, local: &[f64], local_w: &[f64]) -> Self {
        let h = 1.0 / space.cells() as f64;
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let mut vals = Vec::new();
        let mut ders = Vec::new();
        let mut cell_funcs = Vec::new();
        for c in 0..space.cells() {
            let act: Vec<usize> = space.active_on_cell(c).collect();
            for (s, w) in local.iter().zip(local_w) {
                let x = (c as f64 + s) * h;
                nodes.push(x);
                weights.push(w * h);
                vals.push(act.iter().map(|&i| space.eval(i, x)).collect());
                ders.push(act.iter().map(|&i| space.deriv(i, x)).collect());
            }
            cell_funcs.push(act);
        }
        NodeBasis { nodes, weights, per_cell: local.len(), cell_funcs, vals, ders, dim: space.dim() }
    }

    /// `n`-point Gauss-Legendre per cell.
    pub fn legendre(space: &SplineSpace, n: usize) -> Self {
        let (x, w) = gauss_legendre(n).unit_interval();
        Self::from_local(space, &x, &w)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn active(&self, q: usize) -> &[usize] {
        &self.cell_funcs[q / self.per_cell]
    }

    pub fn val(&self, q: usize, a: usize) -> f64 {
        self.vals[q][a]
    }

    /// Values of the spline with coefficients `c` at every node.
    pub fn eval<T: Scalar>(&self, c: &[T]) -> Vec<T> {
        (0..self.len())
            .map(|q| self.active(q).iter().zip(&self.vals[q]).fold(T::zero(), |acc, (&i, v)| acc + c[i] * *v))
            .collect()
    }

    pub fn eval_deriv<T: Scalar>(&self, c: &[T]) -> Vec<T> {
        (0..self.len())
            .map(|q| self.active(q).iter().zip(&self.ders[q]).fold(T::zero(), |acc, (&i, v)| acc + c[i] * *v))
            .collect()
    }

    /// `(h, φ_i)` from node values of `h`.
    pub fn project<T: Scalar>(&self, h: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim];
        for q in 0..self.len() {
            let hw = h[q] * self.weights[q];
            for (&i, v) in self.active(q).iter().zip(&self.vals[q]) {
                out[i] += hw * *v;
            }
        }
        out
    }

    /// Load vector of a smooth function.
    pub fn load<T: Scalar>(&self, f: impl Fn(f64) -> T) -> Vec<T> {
        let h: Vec<T> = self.nodes.iter().map(|&x| f(x)).collect();
        self.project(&h)
    }
}

pub use crate::problem::Side;

/// `∫ φ_i(x) x^e dx` (left) or `∫ φ_i(x) (1-x)^e dx` (right), `e > -1`,
/// integrated exactly cell by cell.
pub fn power_moments(space: &SplineSpace, pi: &PowerIntegrator, e: f64, side: Side) -> Vec<f64> {
    let n = space.dim();
    let h = space.cells() as f64;
    let scale = h.sqrt() * h.powf(-(e + 1.0));
    let left: Vec<f64> = (0..n)
        .map(|i| {
            let (a, b) = space.cell_range(i);
            let shape = space.shape_of(i);
            let shift = space.funcs[i].shift;
            (a..b).map(|c| pi.integrate(c as f64, e, shape.cell(c - shift))).sum::<f64>() * scale
        })
        .collect();
    match side {
        Side::Left => left,
        Side::Right => left.into_iter().rev().collect(),
    }
}

/// Cache of power moments keyed by exponent and side.
#[derive(Debug)]
pub struct MomentCache {
    space: SplineSpace,
    pi: PowerIntegrator,
    store: RefCell<HashMap<(u64, Side), Vec<f64>>>,
}

impl MomentCache {
    pub fn new(space: &SplineSpace) -> Self {
        MomentCache { space: space.clone(), pi: PowerIntegrator::new(), store: RefCell::new(HashMap::new()) }
    }

    /// Add `coef * moments(e, side)` to `out`.
    pub fn add_to<T: Scalar>(&self, coef: T, e: f64, side: Side, out: &mut [T]) {
        let mut store = self.store.borrow_mut();
        let m = store
            .entry((e.to_bits(), side))
            .or_insert_with(|| power_moments(&self.space, &self.pi, e, side));
        for (o, v) in out.iter_mut().zip(m.iter()) {
            *o += coef * *v;
        }
    }
}

/// Linear functionals `h -> ∫ h(x) Z_i(x) dx` with
/// `Z_i = ₀D^{α-1}φ_i - ₓD^{α-1}φ_i`, for `h` smooth on each cell.
///
/// Each cell carries Gauss-Legendre nodes for the smooth part of `Z_i` and
/// Gauss-Jacobi nodes for the `s^{2-α}` and `(1-s)^{2-α}` endpoint parts.
#[derive(Debug, Clone)]
pub struct SingularPairing {
    pub nodes: NodeBasis,
    /// `dim x nodes`.
    pub mat: DMatrix<f64>,
}

impl SingularPairing {
    pub fn new(space: &SplineSpace, alpha: f64) -> Result<Self, AssemblyError> {
        check_alpha(alpha)?;
        let (nl, nj) = (8, 5);
        let e0 = 2.0 - alpha;
        let (lx, lw) = gauss_legendre(nl).unit_interval();
        let (jx, jw) = gauss_jacobi(nj, 0.0, e0).expect("valid exponent").unit_interval();
        let mut local = lx.clone();
        local.extend(&jx);
        local.extend(jx.iter().map(|s| 1.0 - s));
        let mut local_w = lw.clone();
        local_w.extend(&jw);
        local_w.extend(&jw);
        let nb = NodeBasis::from_local(space, &local, &local_w);
        let per = local.len();
        let n = space.dim();
        let cells = space.cells();
        let hinv = 1.0 / cells as f64;
        let fd = FracDerivs::new(space, alpha - 1.0);
        let scale = fd.scale() * hinv;
        let mut mat = DMatrix::zeros(n, nb.len());
        for i in 0..n {
            let mirror = n - 1 - i;
            for c in 0..cells {
                let base = c * per;
                // left derivative of φ_i on cell c
                let shift = space.funcs[i].shift as f64;
                for t in fd.terms_of(i) {
                    let delta = c as f64 - shift - t.knot;
                    if delta < 0.0 {
                        continue;
                    }
                    if delta == 0.0 {
                        let k = t.power - e0;
                        for (q, s) in jx.iter().enumerate() {
                            mat[(i, base + nl + q)] += jw[q] * scale * t.coef * s.powf(k);
                        }
                    } else {
                        for (q, s) in lx.iter().enumerate() {
                            mat[(i, base + q)] += lw[q] * scale * t.coef * (s + delta).powf(t.power);
                        }
                    }
                }
                // right derivative: left derivative of the mirror function at 1 - x,
                // on mirrored cell cells-1-c with local variable 1 - s
                let mc = cells - 1 - c;
                let mshift = space.funcs[mirror].shift as f64;
                for t in fd.terms_of(mirror) {
                    let delta = mc as f64 - mshift - t.knot;
                    if delta < 0.0 {
                        continue;
                    }
                    if delta == 0.0 {
                        let k = t.power - e0;
                        for (q, s) in jx.iter().enumerate() {
                            mat[(i, base + nl + nj + q)] -= jw[q] * scale * t.coef * s.powf(k);
                        }
                    } else {
                        for (q, s) in lx.iter().enumerate() {
                            mat[(i, base + q)] -= lw[q] * scale * t.coef * (1.0 - s + delta).powf(t.power);
                        }
                    }
                }
            }
        }
        Ok(SingularPairing { nodes: nb, mat })
    }

    pub fn apply<T: Scalar>(&self, h: &[T]) -> Vec<T> {
        let n = self.mat.nrows();
        let mut out = vec![T::zero(); n];
        for (q, hq) in h.iter().enumerate() {
            let col = self.mat.column(q);
            for (o, v) in out.iter_mut().zip(col.iter()) {
                *o += *hq * *v;
            }
        }
        out
    }
}

/// `R[i][j] = ∫ (w φ_j)' Z_i dx`; with `w = 1` this is `S + S^T`.
pub fn stiffness_weighted(
    space: &SplineSpace,
    alpha: f64,
    weight: impl Fn(f64) -> C64,
    dweight: impl Fn(f64) -> C64,
) -> Result<DMatrix<C64>, AssemblyError> {
    let pairing = SingularPairing::new(space, alpha)?;
    let nb = &pairing.nodes;
    let n = space.dim();
    let mut out = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    let mut unit = vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        unit[j] = C64::new(1.0, 0.0);
        let v = nb.eval(&unit);
        let dv = nb.eval_deriv(&unit);
        let h: Vec<C64> =
            (0..nb.len()).map(|q| weight(nb.nodes[q]) * dv[q] + dweight(nb.nodes[q]) * v[q]).collect();
        let col = pairing.apply(&h);
        for (i, c) in col.into_iter().enumerate() {
            out[(i, j)] = c;
        }
        unit[j] = C64::new(0.0, 0.0);
    }
    Ok(out)
}

/// Collocation points `1/2^{J+1}, k/2^J (k = 1..2^J-1), 1 - 1/2^{J+1}`.
pub fn colloc_points(level: usize) -> Vec<f64> {
    let h = 1.0 / (1u64 << level) as f64;
    let cells = 1usize << level;
    let mut pts = vec![0.5 * h];
    pts.extend((1..cells).map(|k| k as f64 * h));
    pts.push(1.0 - 0.5 * h);
    pts
}

/// Cubic-spline collocation matrices `(A_L, A_R, E)`: left and right
/// Riemann-Liouville derivatives of order α and point values.
pub fn colloc_matrices(space: &SplineSpace, alpha: f64) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>), AssemblyError> {
    check_alpha(alpha)?;
    if space.d != 4 {
        return Err(AssemblyError::CollocationOrder(space.d));
    }
    let pts = colloc_points(space.level);
    let n = space.dim();
    let fd = FracDerivs::new(space, alpha);
    let al = DMatrix::from_fn(pts.len(), n, |i, k| fd.left(k, pts[i]));
    let ar = DMatrix::from_fn(pts.len(), n, |i, k| al[(pts.len() - 1 - i, n - 1 - k)]);
    let e = DMatrix::from_fn(pts.len(), n, |i, k| space.eval(k, pts[i]));
    Ok((al, ar, e))
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hat_frac_deriv_at_peak() {
        // only the first truncated power contributes at y = 1
        let v = frac_deriv_basis(2, Variant::Interior, 1.5, 1.0).unwrap();
        assert!((v - 1.128_379_167_095_512_6).abs() < 1e-14);
    }

    #[test]
    fn laplacian_limit() {
        let space = SplineSpace::new(2, 4, 1).unwrap();
        let (left, _) = stiffness_1d(&space, 2.0).unwrap();
        let r = riesz_matrix(&left, 2.0, 1.0);
        let h2 = 256.0;
        for i in 0..space.dim() {
            for j in 0..space.dim() {
                let want = if i == j { 2.0 * h2 } else if i.abs_diff(j) == 1 { -h2 } else { 0.0 };
                assert!((r[(i, j)] - want).abs() < 1e-9 * h2, "({i},{j}) {} vs {want}", r[(i, j)]);
            }
        }
    }

    #[test]
    fn hat_mass_is_toeplitz() {
        let space = SplineSpace::new(2, 5, 1).unwrap();
        let m = mass_1d(&space);
        assert!((m.get(3, 3) - 2.0 / 3.0).abs() < 1e-14);
        assert!((m.get(3, 4) - 1.0 / 6.0).abs() < 1e-14);
        assert_eq!(m.get(3, 6), 0.0);
    }

    #[test]
    fn colloc_points_layout() {
        let p = colloc_points(2);
        assert_eq!(p, vec![0.125, 0.25, 0.5, 0.75, 0.875]);
    }
}
