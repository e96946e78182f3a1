//! B-spline scaling functions on (0, 1) for orders 2, 3 and 4, the order-2
//! wavelets, refinement matrices and the fast wavelet transform.
//!
//! Shapes live on integer cells `[0, len]` and are stored as one cubic
//! (or lower) polynomial per cell. A level-`J` basis function is
//! `2^{J/2} shape(2^J x - shift)`. Basis functions are ordered left to
//! right, left boundary variants first and right boundary variants last;
//! reflecting `x -> 1 - x` maps function `i` to function `dim - 1 - i`.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::linalg::BandLu;
use crate::quadrature::gauss_legendre;
use crate::special::gamma;

#[derive(Debug, Error, PartialEq)]
pub enum SplineError {
    #[error("spline order {0} not supported (use 2, 3 or 4)")]
    BadOrder(usize),
    #[error("wavelets are only available for order 2 (got {0})")]
    UnsupportedOrder(usize),
    #[error("level {level} below coarsest level {coarsest}")]
    BadLevel { level: usize, coarsest: usize },
    #[error("coefficient length {got} does not match dimension {want}")]
    LengthMismatch { got: usize, want: usize },
    #[error("expected a square {want}x{want} array, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize, want: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Interior,
    LeftBoundary0,
    LeftBoundary1,
    RightBoundary1,
    RightBoundary0,
}

impl Variant {
    pub fn reflected(self) -> Variant {
        match self {
            Variant::Interior => Variant::Interior,
            Variant::LeftBoundary0 => Variant::RightBoundary0,
            Variant::LeftBoundary1 => Variant::RightBoundary1,
            Variant::RightBoundary1 => Variant::LeftBoundary1,
            Variant::RightBoundary0 => Variant::LeftBoundary0,
        }
    }

    fn is_right(self) -> bool {
        matches!(self, Variant::RightBoundary0 | Variant::RightBoundary1)
    }
}

/// `coef * (y - knot)_+^power`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerTerm {
    pub knot: f64,
    pub power: f64,
    pub coef: f64,
}

impl PowerTerm {
    #[inline]
    pub fn eval(&self, y: f64) -> f64 {
        let r = y - self.knot;
        if r <= 0.0 {
            0.0
        } else if self.power == 0.0 {
            self.coef
        } else {
            self.coef * r.powf(self.power)
        }
    }
}

/// Piecewise polynomial on the integer cells of `[0, len]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Shape {
    cells: Vec<[f64; 4]>,
}

fn binom(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl Shape {
    /// Build from integer-knot truncated powers `(knot, power, coef)`.
    pub fn from_truncated(terms: &[(u32, u32, f64)], len: usize) -> Shape {
        let mut cells = vec![[0.0; 4]; len];
        for (c, cell) in cells.iter_mut().enumerate() {
            for &(knot, p, coef) in terms {
                if knot as usize > c {
                    continue;
                }
                // (s + c - knot)^p expanded in s
                let shift = (c as u32 - knot) as f64;
                for k in 0..=p {
                    cell[k as usize] += coef * binom(p, k) * shift.powi((p - k) as i32);
                }
            }
        }
        Shape { cells }
    }

    pub fn support(&self) -> usize {
        self.cells.len()
    }

    /// Polynomial coefficients on cell `c` in the local variable `s = y - c`.
    pub fn cell(&self, c: usize) -> &[f64; 4] {
        &self.cells[c]
    }

    /// Coefficients of the derivative on cell `c`.
    pub fn cell_deriv(&self, c: usize) -> [f64; 4] {
        let a = &self.cells[c];
        [a[1], 2.0 * a[2], 3.0 * a[3], 0.0]
    }

    fn locate(&self, y: f64) -> Option<(usize, f64)> {
        let len = self.cells.len() as f64;
        if !(0.0..=len).contains(&y) {
            return None;
        }
        let c = (y.floor() as usize).min(self.cells.len() - 1);
        Some((c, y - c as f64))
    }

    pub fn eval(&self, y: f64) -> f64 {
        self.locate(y).map_or(0.0, |(c, s)| horner(&self.cells[c], s))
    }

    pub fn deriv(&self, y: f64) -> f64 {
        self.locate(y).map_or(0.0, |(c, s)| horner(&self.cell_deriv(c), s))
    }

    pub fn second_deriv(&self, y: f64) -> f64 {
        self.locate(y).map_or(0.0, |(c, s)| {
            let a = &self.cells[c];
            2.0 * a[2] + 6.0 * a[3] * s
        })
    }

    /// `y -> shape(len - y)`.
    pub fn mirrored(&self) -> Shape {
        let len = self.cells.len();
        let cells = (0..len)
            .map(|c| {
                // P(1 - s) for the source cell len-1-c
                let a = self.cells[len - 1 - c];
                let mut out = [0.0; 4];
                for (k, &ak) in a.iter().enumerate() {
                    for j in 0..=k {
                        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                        out[j] += ak * binom(k as u32, j as u32) * sign;
                    }
                }
                out
            })
            .collect();
        Shape { cells }
    }

    /// Truncated-power form from derivative jumps at the integer knots
    /// `0..=len`. Jumps below 1e-13 are dropped.
    pub fn truncated_powers(&self) -> Vec<PowerTerm> {
        let len = self.cells.len();
        let mut out = Vec::new();
        let fact = [1.0, 1.0, 2.0, 6.0];
        for knot in 0..=len {
            for p in 0..4 {
                let right = if knot < len { self.cells[knot][p] * fact[p] } else { 0.0 };
                let left = if knot > 0 { deriv_at_one(&self.cells[knot - 1], p) } else { 0.0 };
                let jump = (right - left) / fact[p];
                if jump.abs() > 1e-13 {
                    out.push(PowerTerm { knot: knot as f64, power: p as f64, coef: jump });
                }
            }
        }
        out
    }

    /// Truncated-power form of the left Riemann-Liouville derivative of
    /// order `mu` (`mu = 0` returns the shape itself).
    pub fn frac_terms(&self, mu: f64) -> Vec<PowerTerm> {
        self.truncated_powers()
            .into_iter()
            .filter_map(|t| {
                let c = t.coef * gamma(t.power + 1.0) * crate::special::rgamma(t.power + 1.0 - mu);
                (c != 0.0).then_some(PowerTerm { knot: t.knot, power: t.power - mu, coef: c })
            })
            .collect()
    }
}

fn horner(a: &[f64; 4], s: f64) -> f64 {
    ((a[3] * s + a[2]) * s + a[1]) * s + a[0]
}

/// p-th derivative at s = 1 of the cell polynomial.
fn deriv_at_one(a: &[f64; 4], p: usize) -> f64 {
    match p {
        0 => a[0] + a[1] + a[2] + a[3],
        1 => a[1] + 2.0 * a[2] + 3.0 * a[3],
        2 => 2.0 * a[2] + 6.0 * a[3],
        _ => 6.0 * a[3],
    }
}

/// The unscaled shape of one basis variant; right variants are mirrored
/// onto the same support `[0, len]`.
pub fn base_shape(d: usize, variant: Variant) -> Result<Shape, SplineError> {
    let left = match variant {
        Variant::RightBoundary0 => Variant::LeftBoundary0,
        Variant::RightBoundary1 => Variant::LeftBoundary1,
        v => v,
    };
    let s = match (d, left) {
        (2, Variant::Interior) => Shape::from_truncated(&[(0, 1, 1.0), (1, 1, -2.0), (2, 1, 1.0)], 2),
        (3, Variant::Interior) => Shape::from_truncated(
            &[(0, 2, 0.5), (1, 2, -1.5), (2, 2, 1.5), (3, 2, -0.5)],
            3,
        ),
        (3, Variant::LeftBoundary0) => Shape::from_truncated(
            &[(0, 1, 2.0), (0, 2, -1.5), (1, 2, 2.0), (2, 2, -0.5)],
            2,
        ),
        (4, Variant::Interior) => Shape::from_truncated(
            &[
                (0, 3, 1.0 / 6.0),
                (1, 3, -4.0 / 6.0),
                (2, 3, 1.0),
                (3, 3, -4.0 / 6.0),
                (4, 3, 1.0 / 6.0),
            ],
            4,
        ),
        (4, Variant::LeftBoundary0) => Shape::from_truncated(
            &[(0, 1, 3.0), (0, 2, -4.5), (0, 3, 1.75), (1, 3, -2.0), (2, 3, 0.25)],
            2,
        ),
        (4, Variant::LeftBoundary1) => Shape::from_truncated(
            &[(0, 2, 1.5), (0, 3, -11.0 / 12.0), (1, 3, 1.5), (2, 3, -0.75), (3, 3, 1.0 / 6.0)],
            3,
        ),
        (2..=4, _) => return Err(SplineError::UnsupportedOrder(d)),
        _ => return Err(SplineError::BadOrder(d)),
    };
    Ok(if variant.is_right() { s.mirrored() } else { s })
}

/// Evaluate an unscaled shape at `x` (zero outside its support).
pub fn eval_scaling(d: usize, variant: Variant, x: f64) -> Result<f64, SplineError> {
    Ok(base_shape(d, variant)?.eval(x))
}

/// Number of level-`j` basis functions.
pub fn dimension(d: usize, j: usize) -> usize {
    let cells = 1usize << j;
    match d {
        2 => cells - 1,
        3 => cells,
        4 => cells + 1,
        _ => 0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisFn {
    pub variant: Variant,
    /// Left end of the support in cells of width `2^{-J}`.
    pub shift: usize,
}

#[derive(Debug, Clone)]
pub struct SplineSpace {
    pub d: usize,
    pub level: usize,
    pub coarsest: usize,
    pub funcs: Vec<BasisFn>,
    shapes: Vec<(Variant, Shape)>,
}

impl SplineSpace {
    pub fn new(d: usize, level: usize, coarsest: usize) -> Result<Self, SplineError> {
        if !(2..=4).contains(&d) {
            return Err(SplineError::BadOrder(d));
        }
        let min_level = if d == 4 { 2 } else { 1 };
        if level < coarsest || level < min_level {
            return Err(SplineError::BadLevel { level, coarsest: coarsest.max(min_level) });
        }
        let cells = 1usize << level;
        let mut funcs = Vec::new();
        let interior = |k| BasisFn { variant: Variant::Interior, shift: k };
        match d {
            2 => funcs.extend((0..=cells - 2).map(interior)),
            3 => {
                funcs.push(BasisFn { variant: Variant::LeftBoundary0, shift: 0 });
                funcs.extend((0..=cells - 3).map(interior));
                funcs.push(BasisFn { variant: Variant::RightBoundary0, shift: cells - 2 });
            }
            _ => {
                funcs.push(BasisFn { variant: Variant::LeftBoundary0, shift: 0 });
                funcs.push(BasisFn { variant: Variant::LeftBoundary1, shift: 0 });
                funcs.extend((0..=cells - 4).map(interior));
                funcs.push(BasisFn { variant: Variant::RightBoundary1, shift: cells - 3 });
                funcs.push(BasisFn { variant: Variant::RightBoundary0, shift: cells - 2 });
            }
        }
        let mut shapes = Vec::new();
        for f in &funcs {
            if !shapes.iter().any(|(v, _)| *v == f.variant) {
                shapes.push((f.variant, base_shape(d, f.variant)?));
            }
        }
        Ok(SplineSpace { d, level, coarsest, funcs, shapes })
    }

    pub fn dim(&self) -> usize {
        self.funcs.len()
    }

    /// Number of cells `2^J`.
    pub fn cells(&self) -> usize {
        1 << self.level
    }

    pub fn shape(&self, variant: Variant) -> &Shape {
        &self
            .shapes
            .iter()
            .find(|(v, _)| *v == variant)
            .expect("variant belongs to this space")
            .1
    }

    pub fn shape_of(&self, i: usize) -> &Shape {
        self.shape(self.funcs[i].variant)
    }

    /// Range of cells `[first, last)` covered by function `i`.
    pub fn cell_range(&self, i: usize) -> (usize, usize) {
        let f = self.funcs[i];
        (f.shift, f.shift + self.shape(f.variant).support())
    }

    fn scale(&self) -> f64 {
        (self.cells() as f64).sqrt()
    }

    pub fn eval(&self, i: usize, x: f64) -> f64 {
        let f = self.funcs[i];
        self.scale() * self.shape(f.variant).eval(self.cells() as f64 * x - f.shift as f64)
    }

    pub fn deriv(&self, i: usize, x: f64) -> f64 {
        let f = self.funcs[i];
        let h = self.cells() as f64;
        self.scale() * h * self.shape(f.variant).deriv(h * x - f.shift as f64)
    }

    /// Indices of the functions whose support contains cell `c`.
    pub fn active_on_cell(&self, c: usize) -> impl Iterator<Item = usize> + '_ {
        let d = self.d;
        let lo = c.saturating_sub(d);
        let hi = (c + d).min(self.dim());
        (lo..hi).filter(move |&i| {
            let (a, b) = self.cell_range(i);
            a <= c && c < b
        })
    }

    /// Sum of coefficient-weighted basis functions at `x`.
    pub fn combine<T>(&self, coeffs: &[T], x: f64) -> T
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T> + Default,
    {
        let h = self.cells() as f64;
        let c = ((h * x).floor() as usize).min(self.cells() - 1);
        let mut acc = T::default();
        for i in self.active_on_cell(c) {
            acc = acc + coeffs[i] * self.eval(i, x);
        }
        acc
    }
}

/// Column-compressed sparse matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCols {
    pub rows: usize,
    pub cols: Vec<Vec<(usize, f64)>>,
}

impl SparseCols {
    pub fn ncols(&self) -> usize {
        self.cols.len()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.cols[c].iter().find(|(i, _)| *i == r).map_or(0.0, |e| e.1)
    }

    /// `y += A x`.
    pub fn apply_add<T>(&self, x: &[T], y: &mut [T])
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::ops::AddAssign,
    {
        for (c, col) in self.cols.iter().enumerate() {
            for &(r, v) in col {
                y[r] += x[c] * v;
            }
        }
    }

    /// `y = A^T x`.
    pub fn apply_t<T>(&self, x: &[T], y: &mut [T])
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T> + Default,
    {
        for (c, col) in self.cols.iter().enumerate() {
            y[c] = col.iter().fold(T::default(), |acc, &(r, v)| acc + x[r] * v);
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows, self.cols.len());
        for (c, col) in self.cols.iter().enumerate() {
            for &(r, v) in col {
                m[(r, c)] = v;
            }
        }
        m
    }
}

/// Two-scale matrices between levels `j` and `j + 1`.
#[derive(Debug, Clone)]
pub struct RefinementPair {
    pub level: usize,
    pub m0: SparseCols,
    pub m1: Option<SparseCols>,
}

/// Two-scale coefficients of the level-`j` scaling functions in the
/// level-`j+1` basis. Order 2 uses the closed form; orders 3 and 4 solve
/// the fine Gram system.
pub fn refinement_m0(d: usize, j: usize) -> Result<SparseCols, SplineError> {
    let coarse = SplineSpace::new(d, j, 1.min(j))?;
    let fine = SplineSpace::new(d, j + 1, 1.min(j))?;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    if d == 2 {
        let cols = (0..coarse.dim())
            .map(|k| vec![(2 * k, 0.5 * r), (2 * k + 1, r), (2 * k + 2, 0.5 * r)])
            .collect();
        return Ok(SparseCols { rows: fine.dim(), cols });
    }
    let n = fine.dim();
    let gl = gauss_legendre(4);
    let (nodes, weights) = gl.unit_interval();
    let h = 1.0 / fine.cells() as f64;
    let mut gram = DMatrix::<f64>::zeros(n, n);
    let mut cross = DMatrix::<f64>::zeros(n, coarse.dim());
    for c in 0..fine.cells() {
        let fine_active: Vec<usize> = fine.active_on_cell(c).collect();
        let coarse_active: Vec<usize> = coarse.active_on_cell(c / 2).collect();
        for (s, w) in nodes.iter().zip(&weights) {
            let x = (c as f64 + s) * h;
            let fv: Vec<f64> = fine_active.iter().map(|&i| fine.eval(i, x)).collect();
            for (a, &i) in fine_active.iter().enumerate() {
                for (b, &k) in fine_active.iter().enumerate() {
                    gram[(i, k)] += w * h * fv[a] * fv[b];
                }
                for &k in &coarse_active {
                    cross[(i, k)] += w * h * fv[a] * coarse.eval(k, x);
                }
            }
        }
    }
    let lu = gram.lu();
    let sol = lu.solve(&cross).expect("Gram matrix is nonsingular");
    let cols = (0..coarse.dim())
        .map(|k| {
            (0..n)
                .filter_map(|i| {
                    let v = sol[(i, k)];
                    (v.abs() > 1e-12).then_some((i, v))
                })
                .collect()
        })
        .collect();
    Ok(SparseCols { rows: n, cols })
}

/// Order-2 wavelet coefficients between levels `j` and `j + 1`.
pub fn refinement_m1(d: usize, j: usize) -> Result<SparseCols, SplineError> {
    if d != 2 {
        return Err(SplineError::UnsupportedOrder(d));
    }
    if j < 1 {
        return Err(SplineError::BadLevel { level: j, coarsest: 1 });
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let rows = dimension(2, j + 1);
    let count = 1usize << j;
    let last = rows - 1;
    let mut cols = Vec::with_capacity(count);
    if count == 2 {
        cols.push(vec![(0, 0.9 * r), (1, -0.6 * r), (2, 0.1 * r)]);
        cols.push(vec![(0, 0.1 * r), (1, -0.6 * r), (2, 0.9 * r)]);
        return Ok(SparseCols { rows, cols });
    }
    cols.push(vec![(0, 0.9 * r), (1, -0.6 * r), (2, 0.1 * r)]);
    for k in 1..count - 1 {
        let m = 2 * k;
        cols.push(vec![
            (m - 2, 0.1 * r),
            (m - 1, -0.6 * r),
            (m, r),
            (m + 1, -0.6 * r),
            (m + 2, 0.1 * r),
        ]);
    }
    cols.push(vec![(last - 2, 0.1 * r), (last - 1, -0.6 * r), (last, 0.9 * r)]);
    Ok(SparseCols { rows, cols })
}

pub fn refinement_matrices(d: usize, j: usize) -> Result<RefinementPair, SplineError> {
    let m1 = refinement_m1(d, j)?;
    Ok(RefinementPair { level: j, m0: refinement_m0(d, j)?, m1: Some(m1) })
}

/// Fast wavelet transform between single-scale coefficients at level `J`
/// and multiscale coefficients `(c_{J0}, d_{J0}, ..., d_{J-1})`.
#[derive(Debug, Clone)]
pub struct Fwt {
    pub d: usize,
    pub coarsest: usize,
    pub level: usize,
    pairs: Vec<RefinementPair>,
    solvers: Vec<BandLu>,
}

impl Fwt {
    pub fn new(d: usize, coarsest: usize, level: usize) -> Result<Self, SplineError> {
        if d != 2 {
            return Err(SplineError::UnsupportedOrder(d));
        }
        if coarsest < 1 || level < coarsest {
            return Err(SplineError::BadLevel { level, coarsest });
        }
        let mut pairs = Vec::new();
        let mut solvers = Vec::new();
        for j in coarsest..level {
            let pair = refinement_matrices(d, j)?;
            // column c of the interleaved system is the function centred at
            // fine index c: wavelets at even, scaling functions at odd.
            let n = pair.m0.rows;
            let mut band = BandLu::zeros(n, 2, 2);
            for (k, col) in pair.m0.cols.iter().enumerate() {
                for &(r, v) in col {
                    band.set(r, 2 * k + 1, v);
                }
            }
            for (k, col) in pair.m1.as_ref().expect("order 2 has wavelets").cols.iter().enumerate() {
                for &(r, v) in col {
                    band.set(r, 2 * k, v);
                }
            }
            band.factor();
            pairs.push(pair);
            solvers.push(band);
        }
        Ok(Fwt { d, coarsest, level, pairs, solvers })
    }

    pub fn dim(&self) -> usize {
        dimension(self.d, self.level)
    }

    /// Block lengths `(|c_{J0}|, |d_{J0}|, ..., |d_{J-1}|)`.
    pub fn block_sizes(&self) -> Vec<usize> {
        let mut out = vec![dimension(self.d, self.coarsest)];
        out.extend((self.coarsest..self.level).map(|j| 1usize << j));
        out
    }

    /// Level of each multiscale entry (`None` for coarse scaling functions).
    pub fn levels(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; dimension(self.d, self.coarsest)];
        for j in self.coarsest..self.level {
            out.extend(std::iter::repeat(Some(j)).take(1 << j));
        }
        out
    }

    fn check<T>(&self, v: &[T]) -> Result<(), SplineError> {
        if v.len() != self.dim() {
            return Err(SplineError::LengthMismatch { got: v.len(), want: self.dim() });
        }
        Ok(())
    }

    /// Multiscale to single-scale: `c_{j+1} = M0 c_j + M1 d_j`.
    pub fn inverse<T>(&self, ms: &[T]) -> Result<Vec<T>, SplineError>
    where
        T: Copy + Default + std::ops::Mul<f64, Output = T> + std::ops::AddAssign,
    {
        self.check(ms)?;
        let mut pos = dimension(self.d, self.coarsest);
        let mut c: Vec<T> = ms[..pos].to_vec();
        for pair in &self.pairs {
            let m1 = pair.m1.as_ref().expect("order 2 has wavelets");
            let mut next = vec![T::default(); pair.m0.rows];
            pair.m0.apply_add(&c, &mut next);
            m1.apply_add(&ms[pos..pos + m1.ncols()], &mut next);
            pos += m1.ncols();
            c = next;
        }
        Ok(c)
    }

    /// Transpose of [`Fwt::inverse`], fine to coarse.
    pub fn inverse_transpose<T>(&self, v: &[T]) -> Result<Vec<T>, SplineError>
    where
        T: Copy + Default + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
    {
        self.check(v)?;
        let mut blocks: Vec<Vec<T>> = Vec::new();
        let mut y = v.to_vec();
        for pair in self.pairs.iter().rev() {
            let m1 = pair.m1.as_ref().expect("order 2 has wavelets");
            let mut c = vec![T::default(); pair.m0.ncols()];
            let mut d = vec![T::default(); m1.ncols()];
            pair.m0.apply_t(&y, &mut c);
            m1.apply_t(&y, &mut d);
            blocks.push(d);
            y = c;
        }
        let mut out = y;
        for b in blocks.into_iter().rev() {
            out.extend(b);
        }
        Ok(out)
    }

    /// Single-scale to multiscale.
    pub fn forward(&self, c: &[f64]) -> Result<Vec<f64>, SplineError> {
        self.check(c)?;
        let mut blocks: Vec<Vec<f64>> = Vec::new();
        let mut y = c.to_vec();
        for (pair, lu) in self.pairs.iter().zip(&self.solvers).rev() {
            let z = lu.solve(&y);
            let coarse: Vec<f64> = (0..pair.m0.ncols()).map(|k| z[2 * k + 1]).collect();
            let detail: Vec<f64> = (0..pair.m0.ncols() + 1).map(|k| z[2 * k]).collect();
            blocks.push(detail);
            y = coarse;
        }
        let mut out = y;
        for b in blocks.into_iter().rev() {
            out.extend(b);
        }
        Ok(out)
    }

    fn square_check(&self, a: &DMatrix<f64>) -> Result<(), SplineError> {
        let n = self.dim();
        if a.nrows() != n || a.ncols() != n {
            return Err(SplineError::NotSquare { rows: a.nrows(), cols: a.ncols(), want: n });
        }
        Ok(())
    }

    /// Apply the 1D transform along both axes of a square array.
    pub fn tensor_forward(&self, a: &DMatrix<f64>) -> Result<DMatrix<f64>, SplineError> {
        self.square_check(a)?;
        self.tensor_map(a, |v| self.forward(v))
    }

    pub fn tensor_inverse<T>(&self, a: &DMatrix<T>) -> Result<DMatrix<T>, SplineError>
    where
        T: nalgebra::Scalar + Copy + Default + std::ops::Mul<f64, Output = T> + std::ops::AddAssign,
    {
        self.tensor_map(a, |v| self.inverse(v))
    }

    pub fn tensor_inverse_transpose<T>(&self, a: &DMatrix<T>) -> Result<DMatrix<T>, SplineError>
    where
        T: nalgebra::Scalar + Copy + Default + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
    {
        self.tensor_map(a, |v| self.inverse_transpose(v))
    }

    fn tensor_map<T, F>(&self, a: &DMatrix<T>, f: F) -> Result<DMatrix<T>, SplineError>
    where
        T: nalgebra::Scalar + Copy,
        F: Fn(&[T]) -> Result<Vec<T>, SplineError>,
    {
        let n = self.dim();
        if a.nrows() != n || a.ncols() != n {
            return Err(SplineError::NotSquare { rows: a.nrows(), cols: a.ncols(), want: n });
        }
        let mut tmp = a.clone();
        for j in 0..n {
            let col: Vec<T> = tmp.column(j).iter().copied().collect();
            let out = f(&col)?;
            for (i, v) in out.into_iter().enumerate() {
                tmp[(i, j)] = v;
            }
        }
        for i in 0..n {
            let row: Vec<T> = tmp.row(i).iter().copied().collect();
            let out = f(&row)?;
            for (j, v) in out.into_iter().enumerate() {
                tmp[(i, j)] = v;
            }
        }
        Ok(tmp)
    }
}
