//! Structured products (Toeplitz through circulant FFT, quasi-Toeplitz,
//! banded, Kronecker via reshape), direct solvers and restarted GMRES /
//! Bi-CGSTAB over real or complex scalars.

use std::sync::Arc;

use nalgebra::{ComplexField, DMatrix, DVector, SymmetricEigen};
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

use crate::bspline::Fwt;
use crate::C64;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {want}, got {got}")]
    DimMismatch { want: usize, got: usize },
    #[error("matrix is singular")]
    Singular,
    #[error("mass matrix is not positive definite")]
    NotPositive,
    #[error("preconditioner diagonal entry {index} is {value}; operator not coercive")]
    NotCoercive { index: usize, value: f64 },
}

/// Real or complex field used by the solvers.
pub trait Scalar:
    ComplexField<RealField = f64> + Copy + Default + std::ops::Mul<f64, Output = Self> + Send + Sync
{
    fn from_c64(z: C64) -> Self;
    fn to_c64(self) -> C64;
}

impl Scalar for f64 {
    fn from_c64(z: C64) -> Self {
        z.re
    }
    fn to_c64(self) -> C64 {
        C64::new(self, 0.0)
    }
}

impl Scalar for C64 {
    fn from_c64(z: C64) -> Self {
        z
    }
    fn to_c64(self) -> C64 {
        self
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + x.conjugate() * *y)
}

fn norm<T: Scalar>(a: &[T]) -> f64 {
    a.iter().map(|x| x.modulus_squared()).sum::<f64>().sqrt()
}

fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * *xi;
    }
}

/// Square linear operator on `T^n`.
pub trait LinOp<T: Scalar> {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[T], y: &mut [T]);

    /// Apply to every column of `x`.
    fn apply_cols(&self, x: &DMatrix<T>) -> DMatrix<T> {
        let mut out = DMatrix::zeros(x.nrows(), x.ncols());
        let mut buf = vec![T::zero(); x.nrows()];
        for j in 0..x.ncols() {
            let col: Vec<T> = x.column(j).iter().copied().collect();
            self.apply(&col, &mut buf);
            out.column_mut(j).copy_from_slice(&buf);
        }
        out
    }
}

/// Dense real matrix acting on real or complex vectors.
#[derive(Debug, Clone)]
pub struct DenseOp(pub DMatrix<f64>);

impl<T: Scalar> LinOp<T> for DenseOp {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        let m = &self.0;
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = T::zero();
            for (j, xj) in x.iter().enumerate() {
                acc += *xj * m[(i, j)];
            }
            *yi = acc;
        }
    }

    fn apply_cols(&self, x: &DMatrix<T>) -> DMatrix<T> {
        self.0.map(|v| T::from_real(v)) * x
    }
}

/// Dense matrix over the solver field.
pub struct MatOp<T: Scalar>(pub DMatrix<T>);

impl<T: Scalar> LinOp<T> for MatOp<T> {
    fn dim(&self) -> usize {
        self.0.nrows()
    }
    fn apply(&self, x: &[T], y: &mut [T]) {
        let v = &self.0 * DVector::from_column_slice(x);
        y.copy_from_slice(v.as_slice());
    }
}

/// Real band matrix with `kl` sub- and `ku` super-diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct Banded {
    pub n: usize,
    pub kl: usize,
    pub ku: usize,
    // row-major, row i holds columns i-kl ..= i+ku
    data: Vec<f64>,
}

impl Banded {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Banded { n, kl, ku, data: vec![0.0; n * (kl + ku + 1)] }
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.n || j >= self.n || j + self.kl < i || j > i + self.ku {
            return None;
        }
        Some(i * (self.kl + self.ku + 1) + (j + self.kl - i))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |k| self.data[k])
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.slot(i, j).expect("entry inside the band");
        self.data[k] += v;
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn storage_len(&self) -> usize {
        self.data.len()
    }
}

impl<T: Scalar> LinOp<T> for Banded {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        let w = self.kl + self.ku + 1;
        for (i, yi) in y.iter_mut().enumerate() {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku + 1).min(self.n);
            let row = &self.data[i * w..(i + 1) * w];
            let mut acc = T::zero();
            for j in lo..hi {
                acc += x[j] * row[j + self.kl - i];
            }
            *yi = acc;
        }
    }
}

/// Band LU with partial pivoting, column-oriented storage.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    // column j holds rows j-ku-kl ..= j+kl at offset kl+ku+i-j
    ab: Vec<f64>,
    piv: Vec<usize>,
    factored: bool,
}

impl BandLu {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ld = 2 * kl + ku + 1;
        BandLu { n, kl, ku, ab: vec![0.0; ld * n], piv: vec![0; n], factored: false }
    }

    pub fn from_banded(b: &Banded) -> Self {
        let mut lu = BandLu::zeros(b.n, b.kl, b.ku);
        for i in 0..b.n {
            for j in i.saturating_sub(b.kl)..(i + b.ku + 1).min(b.n) {
                lu.set(i, j, b.get(i, j));
            }
        }
        lu.factor();
        lu
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        let ld = 2 * self.kl + self.ku + 1;
        j * ld + (self.kl + self.ku + i - j)
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(j <= i + self.ku && i <= j + self.kl, "entry ({i},{j}) outside the band");
        let k = self.idx(i, j);
        self.ab[k] = v;
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.ab[self.idx(i, j)]
    }

    pub fn factor(&mut self) {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        for k in 0..n {
            let last = (k + kl + 1).min(n);
            let mut p = k;
            let mut best = self.at(k, k).abs();
            for i in k + 1..last {
                let v = self.at(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            self.piv[k] = p;
            let cend = (k + ku + kl + 1).min(n);
            if p != k {
                for j in k..cend {
                    let (a, b) = (self.idx(k, j), self.idx(p, j));
                    self.ab.swap(a, b);
                }
            }
            let pivot = self.at(k, k);
            if pivot == 0.0 {
                continue;
            }
            for i in k + 1..last {
                let li = self.idx(i, k);
                self.ab[li] /= pivot;
                let l = self.ab[li];
                if l != 0.0 {
                    for j in k + 1..cend {
                        let u = self.at(k, j);
                        let t = self.idx(i, j);
                        self.ab[t] -= l * u;
                    }
                }
            }
        }
        self.factored = true;
    }

    pub fn solve<T: Scalar>(&self, b: &[T]) -> Vec<T> {
        assert!(self.factored, "factor before solving");
        let n = self.n;
        let mut x = b.to_vec();
        for k in 0..n {
            x.swap(k, self.piv[k]);
            let xk = x[k];
            for i in k + 1..(k + self.kl + 1).min(n) {
                x[i] -= xk * self.at(i, k);
            }
        }
        for k in (0..n).rev() {
            let mut acc = x[k];
            for j in k + 1..(k + self.ku + self.kl + 1).min(n) {
                acc -= x[j] * self.at(k, j);
            }
            x[k] = acc * (1.0 / self.at(k, k));
        }
        x
    }
}

/// Circulant embedding of an `n x n` Toeplitz matrix, applied by FFT.
#[derive(Clone)]
pub struct ToeplitzFft {
    n: usize,
    size: usize,
    symbol: Vec<C64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for ToeplitzFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ToeplitzFft").field("n", &self.n).field("size", &self.size).finish()
    }
}

impl ToeplitzFft {
    /// `col[i] = T(i, 0)`, `row[j] = T(0, j)`.
    pub fn new(col: &[C64], row: &[C64]) -> Self {
        let n = col.len();
        assert_eq!(row.len(), n, "first row and column lengths differ");
        let size = (2 * n).saturating_sub(1).max(1).next_power_of_two();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(size);
        let inv = planner.plan_fft_inverse(size);
        let mut symbol = vec![C64::new(0.0, 0.0); size];
        symbol[..n].copy_from_slice(col);
        for k in 1..n {
            symbol[size - k] = row[k];
        }
        fwd.process(&mut symbol);
        ToeplitzFft { n, size, symbol, fwd, inv }
    }

    pub fn from_real(col: &[f64], row: &[f64]) -> Self {
        let c: Vec<C64> = col.iter().map(|&v| C64::new(v, 0.0)).collect();
        let r: Vec<C64> = row.iter().map(|&v| C64::new(v, 0.0)).collect();
        Self::new(&c, &r)
    }

    pub fn embedding_size(&self) -> usize {
        self.size
    }

    pub fn apply_c64(&self, x: &[C64]) -> Vec<C64> {
        let mut buf = vec![C64::new(0.0, 0.0); self.size];
        buf[..self.n].copy_from_slice(x);
        self.fwd.process(&mut buf);
        for (b, s) in buf.iter_mut().zip(&self.symbol) {
            *b *= s;
        }
        self.inv.process(&mut buf);
        let scale = 1.0 / self.size as f64;
        buf.truncate(self.n);
        for b in &mut buf {
            *b *= scale;
        }
        buf
    }
}

/// Dense-free Toeplitz product `T x` given first column and row.
pub fn toeplitz_matvec(first_col: &[C64], first_row: &[C64], x: &[C64]) -> Result<Vec<C64>, LinalgError> {
    if x.len() != first_col.len() || first_row.len() != first_col.len() {
        return Err(LinalgError::DimMismatch { want: first_col.len(), got: x.len() });
    }
    Ok(ToeplitzFft::new(first_col, first_row).apply_c64(x))
}

/// Toeplitz core with explicit border rows and columns of width `border`.
#[derive(Debug, Clone)]
pub struct QuasiToeplitzOp {
    pub n: usize,
    pub border: usize,
    /// `core_col[k] = A(b + k, b)`, `core_row[k] = A(b, b + k)`.
    pub core_col: Vec<f64>,
    pub core_row: Vec<f64>,
    /// Rows `0..b` then `n-b..n`, each of length `n`.
    pub border_rows: Vec<Vec<f64>>,
    /// Columns `0..b` then `n-b..n`, restricted to the core rows.
    pub border_cols: Vec<Vec<f64>>,
    fft: ToeplitzFft,
}

impl QuasiToeplitzOp {
    /// Build from an entry oracle, reading only `O(n * border)` entries.
    pub fn from_entries<F: Fn(usize, usize) -> f64>(n: usize, border: usize, entry: F) -> Self {
        let b = border.min(n / 2);
        let m = n - 2 * b;
        let core_col: Vec<f64> = (0..m).map(|k| entry(b + k, b)).collect();
        let core_row: Vec<f64> = (0..m).map(|k| entry(b, b + k)).collect();
        let rows: Vec<usize> = (0..b).chain(n - b..n).collect();
        let border_rows = rows.iter().map(|&i| (0..n).map(|j| entry(i, j)).collect()).collect();
        let border_cols = rows.iter().map(|&j| (b..n - b).map(|i| entry(i, j)).collect()).collect();
        let fft = ToeplitzFft::from_real(&core_col, &core_row);
        QuasiToeplitzOp { n, border: b, core_col, core_row, border_rows, border_cols, fft }
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let (n, b) = (self.n, self.border);
        let border_idx = |k: usize| if k < b { Some(k) } else if k >= n - b { Some(k - (n - 2 * b)) } else { None };
        if let Some(r) = border_idx(i) {
            return self.border_rows[r][j];
        }
        if let Some(c) = border_idx(j) {
            return self.border_cols[c][i - b];
        }
        let (ci, cj) = (i - b, j - b);
        if ci >= cj {
            self.core_col[ci - cj]
        } else {
            self.core_row[cj - ci]
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.entry(i, j))
    }

    /// Transposed operator.
    pub fn transpose(&self) -> QuasiToeplitzOp {
        QuasiToeplitzOp::from_entries(self.n, self.border, |i, j| self.entry(j, i))
    }

    /// Number of stored reals (the structure never stores `n^2` entries).
    pub fn storage_len(&self) -> usize {
        self.core_col.len()
            + self.core_row.len()
            + self.border_rows.iter().map(Vec::len).sum::<usize>()
            + self.border_cols.iter().map(Vec::len).sum::<usize>()
    }
}

impl<T: Scalar> LinOp<T> for QuasiToeplitzOp {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        let (n, b) = (self.n, self.border);
        let m = n - 2 * b;
        let core_in: Vec<C64> = x[b..n - b].iter().map(|v| v.to_c64()).collect();
        let core = if m > 0 { self.fft.apply_c64(&core_in) } else { Vec::new() };
        let bidx: Vec<usize> = (0..b).chain(n - b..n).collect();
        for (k, yi) in y[b..n - b].iter_mut().enumerate() {
            let mut acc = T::from_c64(core[k]);
            for (c, &j) in bidx.iter().enumerate() {
                acc += x[j] * self.border_cols[c][k];
            }
            *yi = acc;
        }
        for (r, &i) in bidx.iter().enumerate() {
            let row = &self.border_rows[r];
            y[i] = x.iter().zip(row).fold(T::zero(), |acc, (xv, a)| acc + *xv * *a);
        }
    }
}

/// `(M ⊗ A) P = A R(P) M^T` with `R(P)[i][j] = P[i + n j]`.
pub fn kron2_apply<T: Scalar>(a: &dyn LinOp<T>, m: &dyn LinOp<T>, p: &[T]) -> Result<Vec<T>, LinalgError> {
    let n = a.dim();
    if m.dim() != n || p.len() != n * n {
        return Err(LinalgError::DimMismatch { want: n * n, got: p.len() });
    }
    let r = DMatrix::from_column_slice(n, n, p);
    let ar = a.apply_cols(&r);
    let out = m.apply_cols(&ar.transpose()).transpose();
    Ok(out.as_slice().to_vec())
}

/// Result of an iterative solve.
#[derive(Debug, Clone)]
pub struct KrylovResult<T> {
    pub x: Vec<T>,
    /// Inner iterations (GMRES) or matvec pairs (Bi-CGSTAB, halves allowed).
    pub iters: f64,
    pub converged: bool,
    pub rel_residual: f64,
}

fn residual<T: Scalar>(op: &dyn LinOp<T>, b: &[T], x: &[T]) -> Vec<T> {
    let mut r = vec![T::zero(); b.len()];
    op.apply(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = *bi - *ri;
    }
    r
}

/// Complex Givens rotation zeroing `b` against `a`.
fn givens<T: Scalar>(a: T, b: T) -> (f64, T) {
    let na = a.modulus();
    let nb = b.modulus();
    if nb == 0.0 {
        return (1.0, T::zero());
    }
    if na == 0.0 {
        return (0.0, T::one());
    }
    let r = (na * na + nb * nb).sqrt();
    let phase = a * (1.0 / na);
    (na / r, phase * b.conjugate() * (1.0 / r))
}

/// Restarted GMRES; stops when `||r_k|| <= tol ||r_0||`.
pub fn gmres_restarted<T: Scalar>(
    op: &dyn LinOp<T>,
    b: &[T],
    x0: &[T],
    restart: usize,
    tol: f64,
    maxiter: usize,
) -> KrylovResult<T> {
    let n = b.len();
    let m = restart.max(1).min(n.max(1));
    let mut x = x0.to_vec();
    let mut r = residual(op, b, &x);
    let r0 = norm(&r);
    let mut total = 0usize;
    if r0 == 0.0 {
        return KrylovResult { x, iters: 0.0, converged: true, rel_residual: 0.0 };
    }
    let target = tol * r0;
    let mut beta = r0;
    let mut w = vec![T::zero(); n];
    loop {
        let mut v: Vec<Vec<T>> = Vec::with_capacity(m + 1);
        v.push(r.iter().map(|&ri| ri * (1.0 / beta)).collect());
        let mut h = vec![vec![T::zero(); m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![T::zero(); m];
        let mut g = vec![T::zero(); m + 1];
        g[0] = T::from_real(beta);
        let mut k_used = 0;
        let mut res = beta;
        for k in 0..m {
            op.apply(&v[k], &mut w);
            for (i, vi) in v.iter().enumerate() {
                let hik = dot(vi, &w);
                h[i][k] = hik;
                axpy(-hik, vi, &mut w);
            }
            let hn = norm(&w);
            h[k + 1][k] = T::from_real(hn);
            for i in 0..k {
                let (c, s) = (cs[i], sn[i]);
                let (a1, a2) = (h[i][k], h[i + 1][k]);
                h[i][k] = a1 * c + s * a2;
                h[i + 1][k] = -(s.conjugate() * a1) + a2 * c;
            }
            let (c, s) = givens(h[k][k], h[k + 1][k]);
            cs[k] = c;
            sn[k] = s;
            let (a1, a2) = (h[k][k], h[k + 1][k]);
            h[k][k] = a1 * c + s * a2;
            h[k + 1][k] = T::zero();
            let (g1, g2) = (g[k], g[k + 1]);
            g[k] = g1 * c + s * g2;
            g[k + 1] = -(s.conjugate() * g1) + g2 * c;
            total += 1;
            k_used = k + 1;
            res = g[k + 1].modulus();
            if res <= target || total >= maxiter || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|&wi| wi * (1.0 / hn)).collect());
        }
        // back substitution
        let mut y = vec![T::zero(); k_used];
        for i in (0..k_used).rev() {
            let mut acc = g[i];
            for j in i + 1..k_used {
                acc -= h[i][j] * y[j];
            }
            y[i] = acc / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            axpy(*yj, &v[j], &mut x);
        }
        r = residual(op, b, &x);
        beta = norm(&r);
        if beta <= target || res <= target {
            return KrylovResult { x, iters: total as f64, converged: true, rel_residual: beta / r0 };
        }
        if total >= maxiter {
            return KrylovResult { x, iters: total as f64, converged: false, rel_residual: beta / r0 };
        }
    }
}

/// Bi-CGSTAB; a convergence detected after the first half step counts 0.5.
pub fn bicgstab<T: Scalar>(op: &dyn LinOp<T>, b: &[T], x0: &[T], tol: f64, maxiter: usize) -> KrylovResult<T> {
    let n = b.len();
    let mut x = x0.to_vec();
    let mut r = residual(op, b, &x);
    let r0n = norm(&r);
    if r0n == 0.0 {
        return KrylovResult { x, iters: 0.0, converged: true, rel_residual: 0.0 };
    }
    let target = tol * r0n;
    let rhat = r.clone();
    let mut rho = T::one();
    let mut alpha = T::one();
    let mut omega = T::one();
    let mut v = vec![T::zero(); n];
    let mut p = vec![T::zero(); n];
    let mut s = vec![T::zero(); n];
    let mut t = vec![T::zero(); n];
    let mut iters = 0.0;
    for _ in 0..maxiter {
        let rho_new = dot(&rhat, &r);
        if rho_new.modulus() == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        op.apply(&p, &mut v);
        alpha = rho / dot(&rhat, &v);
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm(&s) <= target {
            axpy(alpha, &p, &mut x);
            iters += 0.5;
            let rel = norm(&residual(op, b, &x)) / r0n;
            return KrylovResult { x, iters, converged: true, rel_residual: rel };
        }
        op.apply(&s, &mut t);
        let tt = dot(&t, &t);
        omega = if tt.modulus() == 0.0 { T::zero() } else { dot(&t, &s) / tt };
        for i in 0..n {
            x[i] += alpha * p[i] + omega * s[i];
            r[i] = s[i] - omega * t[i];
        }
        iters += 1.0;
        if norm(&r) <= target {
            let rel = norm(&residual(op, b, &x)) / r0n;
            return KrylovResult { x, iters, converged: true, rel_residual: rel };
        }
        if omega.modulus() == 0.0 {
            break;
        }
    }
    let rel = norm(&residual(op, b, &x)) / r0n;
    KrylovResult { x, iters, converged: rel <= tol, rel_residual: rel }
}

/// LU of a real matrix, solving real or complex right-hand sides.
pub struct RealLu {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl RealLu {
    pub fn new(a: DMatrix<f64>) -> Result<Self, LinalgError> {
        let lu = a.lu();
        if !lu.is_invertible() {
            return Err(LinalgError::Singular);
        }
        Ok(RealLu { lu })
    }

    pub fn solve<T: Scalar>(&self, b: &[T]) -> Vec<T> {
        let c: Vec<C64> = b.iter().map(|v| v.to_c64()).collect();
        let re = DVector::from_iterator(c.len(), c.iter().map(|z| z.re));
        let im = DVector::from_iterator(c.len(), c.iter().map(|z| z.im));
        let xr = self.lu.solve(&re).expect("invertible");
        let has_im = im.iter().any(|v| *v != 0.0);
        let xi = if has_im { self.lu.solve(&im).expect("invertible") } else { DVector::zeros(c.len()) };
        xr.iter().zip(xi.iter()).map(|(r, i)| T::from_c64(C64::new(*r, *i))).collect()
    }
}

/// Solver for `(c1 M + c2 K) x = b` with `M` SPD and `K` symmetric, for many
/// coefficient pairs: one Cholesky and one symmetric eigendecomposition.
pub struct PencilSolver {
    l: DMatrix<f64>,
    vecs: DMatrix<f64>,
    vals: DVector<f64>,
}

impl PencilSolver {
    pub fn new(m: &DMatrix<f64>, k: &DMatrix<f64>) -> Result<Self, LinalgError> {
        let chol = m.clone().cholesky().ok_or(LinalgError::NotPositive)?;
        let l = chol.l();
        let linv_k = l.solve_lower_triangular(k).ok_or(LinalgError::Singular)?;
        let c = l.solve_lower_triangular(&linv_k.transpose()).ok_or(LinalgError::Singular)?;
        let c = (&c + c.transpose()) * 0.5;
        let eig = SymmetricEigen::new(c);
        Ok(PencilSolver { l, vecs: eig.eigenvectors, vals: eig.eigenvalues })
    }

    pub fn solve(&self, c1: f64, c2: f64, b: &[C64]) -> Result<Vec<C64>, LinalgError> {
        let n = b.len();
        let mut out = vec![C64::new(0.0, 0.0); n];
        for part in 0..2 {
            let rhs = DVector::from_iterator(n, b.iter().map(|z| if part == 0 { z.re } else { z.im }));
            if rhs.iter().all(|v| *v == 0.0) {
                continue;
            }
            let y = self.l.solve_lower_triangular(&rhs).ok_or(LinalgError::Singular)?;
            let mut z = self.vecs.tr_mul(&y);
            for (zi, lam) in z.iter_mut().zip(self.vals.iter()) {
                let d = c1 + c2 * lam;
                if d == 0.0 {
                    return Err(LinalgError::Singular);
                }
                *zi /= d;
            }
            let w = &self.vecs * z;
            let x = self.l.transpose().solve_upper_triangular(&w).ok_or(LinalgError::Singular)?;
            for (o, v) in out.iter_mut().zip(x.iter()) {
                if part == 0 {
                    o.re = *v;
                } else {
                    o.im = *v;
                }
            }
        }
        Ok(out)
    }
}

/// `X -> q0 M X M + S X M + M X S^T` on `n x n` coefficient arrays stored
/// column-major, with `M` symmetric.
pub struct SylvesterOp<'a> {
    pub q0: f64,
    pub mass: &'a Banded,
    pub stiff: &'a QuasiToeplitzOp,
}

impl SylvesterOp<'_> {
    pub fn apply_mat<T: Scalar>(&self, x: &DMatrix<T>) -> DMatrix<T> {
        let xt = x.transpose();
        let y1 = LinOp::<T>::apply_cols(self.mass, &xt).transpose();
        let y2 = LinOp::<T>::apply_cols(self.stiff, &xt).transpose();
        let left = LinOp::<T>::apply_cols(self.stiff, &y1);
        let right = LinOp::<T>::apply_cols(self.mass, &(y2 + y1 * T::from_real(self.q0)));
        left + right
    }
}

impl<T: Scalar> LinOp<T> for SylvesterOp<'_> {
    fn dim(&self) -> usize {
        self.mass.n * self.mass.n
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        let n = self.mass.n;
        let out = self.apply_mat(&DMatrix::from_column_slice(n, n, x));
        y.copy_from_slice(out.as_slice());
    }
}

/// Diagonal scaling in the wavelet basis: `m_a`, `s_a` are the diagonals of
/// the mass and stiffness matrices after the change of basis.
pub struct WaveletPrecond {
    pub fwt: Fwt,
    pub mass_diag: Vec<f64>,
    pub stiff_diag: Vec<f64>,
}

impl WaveletPrecond {
    pub fn new(fwt: Fwt, mass: &Banded, stiff: &QuasiToeplitzOp) -> Result<Self, LinalgError> {
        let n = fwt.dim();
        if mass.n != n || stiff.n != n {
            return Err(LinalgError::DimMismatch { want: n, got: mass.n });
        }
        let mut mass_diag = Vec::with_capacity(n);
        let mut stiff_diag = Vec::with_capacity(n);
        let mut unit = vec![0.0; n];
        let mut buf = vec![0.0; n];
        for a in 0..n {
            unit[a] = 1.0;
            let w = fwt.inverse(&unit).map_err(|_| LinalgError::DimMismatch { want: n, got: unit.len() })?;
            unit[a] = 0.0;
            LinOp::<f64>::apply(mass, &w, &mut buf);
            mass_diag.push(w.iter().zip(&buf).map(|(p, q)| p * q).sum());
            LinOp::<f64>::apply(stiff, &w, &mut buf);
            stiff_diag.push(w.iter().zip(&buf).map(|(p, q)| p * q).sum());
        }
        Ok(WaveletPrecond { fwt, mass_diag, stiff_diag })
    }

    /// `D[a][b] = (q0 m_a m_b + s_a m_b + m_a s_b)^{-1/2}`.
    pub fn scaling(&self, q0: f64) -> Result<DMatrix<f64>, LinalgError> {
        let n = self.mass_diag.len();
        let (m, s) = (&self.mass_diag, &self.stiff_diag);
        let mut d = DMatrix::zeros(n, n);
        for b in 0..n {
            for a in 0..n {
                let v = q0 * m[a] * m[b] + s[a] * m[b] + m[a] * s[b];
                if !(v > 0.0) {
                    return Err(LinalgError::NotCoercive { index: a + n * b, value: v });
                }
                d[(a, b)] = v.powf(-0.5);
            }
        }
        Ok(d)
    }

    /// `Y -> W (D .* Y) W^T`.
    pub fn to_single<T: Scalar>(&self, d: &DMatrix<f64>, y: &DMatrix<T>) -> DMatrix<T> {
        let scaled = y.zip_map(d, |v, s| v * s);
        self.fwt.tensor_inverse(&scaled).expect("square")
    }

    /// `Z -> D .* (W^T Z W)`.
    pub fn to_multi<T: Scalar>(&self, d: &DMatrix<f64>, z: &DMatrix<T>) -> DMatrix<T> {
        let t = self.fwt.tensor_inverse_transpose(z).expect("square");
        t.zip_map(d, |v, s| v * s)
    }
}

/// Split-preconditioned operator `D W^T B W D`.
pub struct PrecondOp<'a> {
    pub op: &'a SylvesterOp<'a>,
    pub pre: &'a WaveletPrecond,
    pub d: DMatrix<f64>,
}

impl<T: Scalar> LinOp<T> for PrecondOp<'_> {
    fn dim(&self) -> usize {
        self.d.len()
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        let n = self.d.nrows();
        let single = self.pre.to_single(&self.d, &DMatrix::from_column_slice(n, n, x));
        let out = self.pre.to_multi(&self.d, &self.op.apply_mat(&single));
        y.copy_from_slice(out.as_slice());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
    }

    #[test]
    fn toeplitz_identity_and_dense() {
        let n = 64;
        let mut col = vec![C64::new(0.0, 0.0); n];
        let row = col.clone();
        col[0] = C64::new(1.0, 0.0);
        let mut row1 = row;
        row1[0] = col[0];
        let x: Vec<C64> = (0..n).map(|i| C64::new(i as f64, -(i as f64) / 3.0)).collect();
        let y = toeplitz_matvec(&col, &row1, &x).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).norm() < 1e-11);
        }
        let mut seed = 7;
        let c: Vec<C64> = (0..n).map(|_| C64::new(lcg(&mut seed), lcg(&mut seed))).collect();
        let mut r: Vec<C64> = (0..n).map(|_| C64::new(lcg(&mut seed), lcg(&mut seed))).collect();
        r[0] = c[0];
        let y = toeplitz_matvec(&c, &r, &x).unwrap();
        for i in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..n {
                let t = if i >= j { c[i - j] } else { r[j - i] };
                acc += t * x[j];
            }
            assert!((acc - y[i]).norm() < 1e-11);
        }
    }

    #[test]
    fn band_lu_matches_dense() {
        let n = 30;
        let mut seed = 11;
        let mut b = Banded::zeros(n, 2, 2);
        for i in 0..n {
            for j in i.saturating_sub(2)..(i + 3).min(n) {
                b.add(i, j, lcg(&mut seed) + if i == j { 0.1 } else { 0.0 });
            }
        }
        let lu = BandLu::from_banded(&b);
        let rhs: Vec<f64> = (0..n).map(|_| lcg(&mut seed)).collect();
        let x = lu.solve(&rhs);
        let mut back = vec![0.0; n];
        LinOp::<f64>::apply(&b, &x, &mut back);
        for (a, c) in back.iter().zip(&rhs) {
            assert!((a - c).abs() < 1e-10);
        }
    }

    #[test]
    fn gmres_identity_one_iteration() {
        let id = DenseOp(DMatrix::identity(5, 5));
        let b = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let res = gmres_restarted::<f64>(&id, &b, &[0.0; 5], 30, 1e-8, 100);
        assert_eq!(res.iters, 1.0);
        assert!(res.converged);
    }

    #[test]
    fn bicgstab_diagonal() {
        let d = DenseOp(DMatrix::identity(4, 4) * 2.0);
        let b = vec![2.0, 4.0, 6.0, 8.0];
        let res = bicgstab::<f64>(&d, &b, &[0.0; 4], 1e-8, 100);
        assert!(res.iters <= 1.0);
        for (i, v) in res.x.iter().enumerate() {
            assert!((v - (i + 1) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn kron_identity() {
        let id = DenseOp(DMatrix::identity(3, 3));
        let p: Vec<f64> = (0..9).map(|v| v as f64).collect();
        assert_eq!(kron2_apply::<f64>(&id, &id, &p).unwrap(), p);
    }
}
