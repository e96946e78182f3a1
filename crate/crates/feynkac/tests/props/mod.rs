//! Property checks shared by the per-module suites and the acceptance run.
#![allow(dead_code)]

use feynkac::bspline::{Fwt, SplineSpace};
use feynkac::fracassembly::{stiffness_1d, FracDerivs};
use feynkac::fracweights::*;
use feynkac::linalg::LinOp;
use feynkac::quadrature::gauss_legendre;
use feynkac::special::gamma;
use feynkac::stepper::{march_constant, Form, Operators1d};
use feynkac::C64;
use nalgebra::{DMatrix, DVector};

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)*) => {
        if !$cond {
            return Err(format!($($msg)*));
        }
    };
}

pub fn tables(g: f64, steps: usize, t_end: f64) -> [WeightTable; 2] {
    let grid = TimeGrid::uniform(t_end, steps).unwrap();
    [fbdf_q(g, &grid).unwrap(), pi_q_uniform(g, &grid).unwrap()]
}

pub fn history(v: &[f64]) -> Vec<Vec<C64>> {
    v.iter().map(|&x| vec![C64::new(x, 0.0)]).collect()
}

/// `(𝓛 V)_n` for a scalar history; `corrected` adds the `L_n` term.
pub fn apply_at(table: &WeightTable, grid: &TimeGrid, pu: f64, hist: &[Vec<C64>], n: usize, corrected: bool) -> f64 {
    let l_n = corrected.then(|| table.l[n]);
    substantial_apply(&table.q, l_n, grid, Decay::Scalar(C64::new(pu, 0.0)), hist, n).unwrap()[0].re
}

/// Discrete positivity of the corrected and Caputo forms for one history.
pub fn positivity(v: &[f64], g: f64, pu: f64, tau: f64) -> Check {
    let m = v.len();
    let grid = TimeGrid::uniform(tau * m as f64, m).unwrap();
    let hist = history(v);
    let e = |l: usize| (-pu * l as f64 * tau).exp();
    for table in tables(g, m, tau * m as f64) {
        let scale = (table.q[0] * v.iter().map(|x| x * x).sum::<f64>()).max(1.0);
        // corrected form: sum over n of (𝓛V)_n V_n
        let mut total = table.q[0] * v[0] * v[0];
        for n in 1..m {
            let lv = apply_at(&table, &grid, pu, &hist, n, true);
            total += lv * v[n];
            // per-step lower bound when Q_n <= L_n
            if table.q[n] <= table.l[n] {
                let mut lower = table.l[n] / 2.0 * v[n] * v[n];
                for l in 0..=n {
                    lower += 0.5 * e(l) * table.q[l] * v[n - l] * v[n - l];
                }
                for l in 0..n {
                    lower -= 0.5 * e(l) * table.q[l] * v[n - 1 - l] * v[n - 1 - l];
                }
                ensure!(lv * v[n] >= lower - 1e-12 * scale, "{:?} n={n}: step bound", table.scheme);
            }
            // Caputo form lower bound
            let cv = apply_at(&table, &grid, pu, &hist, n, false);
            let mut lower = (table.q[0] / 2.0 + table.q[n - 1] / 4.0) * v[n] * v[n];
            for l in 1..n {
                lower += 0.5 * e(l) * e(l) * table.q_diff(l) * v[n - l] * v[n - l];
            }
            lower -= e(n) * e(n) * table.q[n - 1] * v[0] * v[0];
            ensure!(cv * v[n] >= lower - 1e-12 * scale, "{:?} n={n}: caputo bound", table.scheme);
        }
        ensure!(total >= -1e-12 * scale, "{:?}: quadratic form {total}", table.scheme);
    }
    Ok(())
}

/// `0 < Q_n < Q_{n-1}` and `L_{n+1} < Q_n <= L_n` up to `steps`.
pub fn weight_chain(steps: usize) -> Check {
    for g in [0.1, 0.5, 0.9] {
        for table in tables(g, steps, 1.0) {
            for n in 1..steps - 1 {
                let (q, l) = (&table.q, &table.l);
                ensure!(q[n] > 0.0 && q[n] < q[n - 1], "{:?} g={g} n={n}: Q not decreasing", table.scheme);
                ensure!(l[n + 1] < q[n], "{:?} g={g} n={n}: L_n+1 {} Q_n {}", table.scheme, l[n + 1], q[n]);
                ensure!(q[n] <= l[n], "{:?} g={g} n={n}: Q_n {} L_n {}", table.scheme, q[n], l[n]);
            }
        }
    }
    Ok(())
}

fn consistency_error(scheme: TimeScheme, g: f64, pu: f64, steps: usize) -> f64 {
    let grid = TimeGrid::uniform(1.0, steps).unwrap();
    let table = match scheme {
        TimeScheme::Fbdf => fbdf_q(g, &grid).unwrap(),
        TimeScheme::Pi => pi_q_uniform(g, &grid).unwrap(),
    };
    let v: Vec<f64> = grid.nodes.iter().map(|t| (-pu * t).exp() * t * t).collect();
    let got = apply_at(&table, &grid, pu, &history(&v), steps, false);
    let want = (-pu).exp() * 2.0 / gamma(3.0 - g);
    (got - want).abs()
}

/// Observed orders on `e^{-pu t} t^2` between N = 256 and 512.
pub fn consistency_orders() -> Check {
    for g in [0.3, 0.5, 0.8] {
        for pu in [0.0, 0.7] {
            for (scheme, order) in [(TimeScheme::Pi, 2.0 - g), (TimeScheme::Fbdf, 1.0)] {
                let rate = (consistency_error(scheme, g, pu, 256) / consistency_error(scheme, g, pu, 512)).log2();
                ensure!((rate - order).abs() < 0.15, "{scheme:?} g={g} pu={pu}: rate {rate}");
            }
        }
    }
    Ok(())
}

/// Dense assembly by graded Gauss-Legendre on every cell, using pointwise
/// fractional derivatives.
pub fn brute_force_stiffness(space: &SplineSpace, alpha: f64) -> DMatrix<f64> {
    let fd = FracDerivs::new(space, alpha - 1.0);
    let (u, w) = gauss_legendre(24).unit_interval();
    let m = 6;
    let h = 1.0 / space.cells() as f64;
    let n = space.dim();
    DMatrix::from_fn(n, n, |i, j| {
        let (a, b) = space.cell_range(i);
        let mut acc = 0.0;
        for c in a..b {
            for (uq, wq) in u.iter().zip(&w) {
                let s = uq.powi(m);
                let ds = m as f64 * uq.powi(m - 1);
                let x = (c as f64 + s) * h;
                acc += wq * ds * h * fd.left(j, x) * space.deriv(i, x);
            }
        }
        acc
    })
}

pub fn quasi_toeplitz_matches_brute_force() -> Check {
    for (d, level, alpha) in [(2, 4, 1.5), (2, 5, 1.2), (3, 4, 1.8), (3, 5, 1.3)] {
        let space = SplineSpace::new(d, level, 1).unwrap();
        let (s, sr) = stiffness_1d(&space, alpha).unwrap();
        let dense = s.to_dense();
        let scale = dense.amax();
        let gap = (&dense - brute_force_stiffness(&space, alpha)).amax();
        ensure!(gap < 1e-9 * scale, "d={d} J={level}: {gap}");
        ensure!(sr.to_dense() == dense.transpose(), "d={d} J={level}: right form is not the transpose");
        // FFT apply on unit vectors
        let n = space.dim();
        for k in 0..n {
            let mut e = vec![0.0; n];
            e[k] = 1.0;
            let mut y = vec![0.0; n];
            s.apply(&e, &mut y);
            for i in 0..n {
                ensure!((y[i] - dense[(i, k)]).abs() < 1e-10 * scale, "d={d} J={level}: apply ({i},{k})");
            }
        }
        ensure!(s.storage_len() < 8 * n, "d={d} J={level}: storage {}", s.storage_len());
    }
    Ok(())
}

pub fn fwt_round_trip(v: &[f64]) -> Check {
    let fwt = Fwt::new(2, 2, 6).unwrap();
    let back = fwt.inverse(&fwt.forward(v).unwrap()).unwrap();
    for (a, b) in back.iter().zip(v) {
        ensure!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
    Ok(())
}

fn quad_form(a: &DMatrix<f64>, c: &[f64]) -> f64 {
    let v = DVector::from_column_slice(c);
    v.dot(&(a * &v))
}

pub fn zero_march(ops: &Operators1d, form: Form, time: TimeScheme, grid: &TimeGrid, g: f64, pu: f64, g0: Vec<f64>) -> Vec<Vec<f64>> {
    let dim = ops.dim();
    march_constant(ops, form, time, grid, g, pu, g0, |_, _| vec![0.0; dim]).unwrap()
}

/// Stability bounds with zero forcing on 31 hat coefficients (J = 5).
pub fn zero_forcing_stability(g0: &[f64], tau: f64, pu: f64, g: f64) -> Check {
    let k = 1.3;
    let ops = Operators1d::new(2, 5, 1, 1.5, k).unwrap();
    let grid = TimeGrid::uniform(40.0 * tau, 40).unwrap();
    let norm = |c: &[f64]| quad_form(&ops.mass, c).sqrt();
    // K B(c, c)
    let energy = |c: &[f64]| quad_form(&ops.kb, c);
    let l2_0 = norm(g0);
    let e0 = energy(g0).sqrt();

    let bound = l2_0 + 2.0 * tau.powf(g / 2.0) * e0;
    for c in zero_march(&ops, Form::I, TimeScheme::Fbdf, &grid, g, pu, g0.to_vec()) {
        ensure!(norm(&c) <= bound + 1e-10, "I-FBDF {} > {bound}", norm(&c));
    }
    let bound = 4.0 * l2_0 + 5.0 * tau.powf(g / 2.0) / gamma(g + 1.0).sqrt() * e0;
    for c in zero_march(&ops, Form::I, TimeScheme::Pi, &grid, g, pu, g0.to_vec()) {
        ensure!(norm(&c) <= bound + 1e-10, "I-PI {} > {bound}", norm(&c));
    }
    for time in [TimeScheme::Fbdf, TimeScheme::Pi] {
        let q0 = match time {
            TimeScheme::Fbdf => fbdf_q(g, &grid).unwrap().q[0],
            TimeScheme::Pi => pi_q_uniform(g, &grid).unwrap().q[0],
        };
        let hist = zero_march(&ops, Form::II, time, &grid, g, pu, g0.to_vec());
        for c in hist.iter().skip(1) {
            let lhs = norm(c).powi(2) + 2.0 / q0 * energy(c);
            ensure!(lhs <= 2.0 * l2_0 * l2_0 + 1e-10, "II {time:?}: {lhs} > {}", 2.0 * l2_0 * l2_0);
        }
    }
    Ok(())
}
