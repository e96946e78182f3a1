//! Time grids and coefficient sequences of the discrete substantial
//! derivative: Grünwald (FBDF) and product-integration (PI) weights on
//! uniform grids, per-step PI weights on graded grids.

use thiserror::Error;

use crate::special::{gamma, pow_diff, rgamma};
use crate::C64;

#[derive(Debug, Error, PartialEq)]
pub enum WeightError {
    #[error("FBDF weights need a uniform time grid")]
    NonUniformGrid,
    #[error("step index {n} outside 1..={max}")]
    StepOutOfRange { n: usize, max: usize },
    #[error("history has {got} entries, step {n} needs {need}")]
    ShortHistory { n: usize, got: usize, need: usize },
    #[error("invalid time grid: {0}")]
    BadGrid(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeshKind {
    Uniform,
    Graded { grade: f64 },
}

/// Nodes `t_0 = 0 < t_1 < ... < t_N = T`.
#[derive(Debug, Clone)]
pub struct TimeGrid {
    pub nodes: Vec<f64>,
    pub kind: MeshKind,
}

impl TimeGrid {
    pub fn uniform(t_end: f64, steps: usize) -> Result<Self, WeightError> {
        if !(t_end > 0.0) || steps == 0 {
            return Err(WeightError::BadGrid(format!("T={t_end}, N={steps}")));
        }
        let tau = t_end / steps as f64;
        let mut nodes: Vec<f64> = (0..=steps).map(|j| j as f64 * tau).collect();
        nodes[steps] = t_end;
        Ok(TimeGrid { nodes, kind: MeshKind::Uniform })
    }

    /// `t_j = (j/N)^grade * T`.
    pub fn graded(t_end: f64, steps: usize, grade: f64) -> Result<Self, WeightError> {
        if !(t_end > 0.0) || steps == 0 || !(grade >= 1.0) {
            return Err(WeightError::BadGrid(format!("T={t_end}, N={steps}, grade={grade}")));
        }
        let nodes = (0..=steps)
            .map(|j| (j as f64 / steps as f64).powf(grade) * t_end)
            .collect();
        Ok(TimeGrid { nodes, kind: MeshKind::Graded { grade } })
    }

    pub fn steps(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn t(&self, j: usize) -> f64 {
        self.nodes[j]
    }

    /// Length of step `j`, i.e. `t_j - t_{j-1}`.
    pub fn step(&self, j: usize) -> f64 {
        self.nodes[j] - self.nodes[j - 1]
    }

    /// Constant step for uniform grids.
    pub fn tau(&self) -> Option<f64> {
        match self.kind {
            MeshKind::Uniform => Some(self.nodes[self.steps()] / self.steps() as f64),
            MeshKind::Graded { .. } => None,
        }
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.kind, MeshKind::Uniform)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeScheme {
    Fbdf,
    Pi,
}

/// Coefficients of the unified operator for one fractional order.
///
/// `q[n]` is `Q_n` for `n = 0..N-1`, `l[n]` is `L_n` with `L_0 = Q_0`.
#[derive(Debug, Clone)]
pub struct WeightTable {
    pub scheme: TimeScheme,
    pub order: f64,
    pub q: Vec<f64>,
    pub l: Vec<f64>,
    pub raw: Vec<f64>,
}

impl WeightTable {
    /// `Q_n - Q_{n-1}` with `Q_{-1} = 0`.
    pub fn q_diff(&self, n: usize) -> f64 {
        if n == 0 {
            self.q[0]
        } else {
            self.q[n] - self.q[n - 1]
        }
    }
}

/// `w_j = tau^{-g} (-1)^j C(g, j)` for `j = 0..=n`.
pub fn grunwald_weights(g: f64, tau: f64, n: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(n + 1);
    w.push(tau.powf(-g));
    for j in 1..=n {
        let prev = w[j - 1];
        w.push(prev * (1.0 - (g + 1.0) / j as f64));
    }
    w
}

/// `L_n = t_n^{-g} / Γ(1-g)`, with `L_0 = Q_0`.
fn l_sequence(g: f64, nodes: &[f64], q0: f64) -> Vec<f64> {
    let r = rgamma(1.0 - g);
    let mut l = Vec::with_capacity(nodes.len());
    l.push(q0);
    for &t in &nodes[1..] {
        l.push(t.powf(-g) * r);
    }
    l
}

/// FBDF table: `Q_n = tau^{-g} (-1)^n C(g-1, n)`, built by
/// `Q_n = Q_{n-1} (n - g) / n`.
pub fn fbdf_q(g: f64, grid: &TimeGrid) -> Result<WeightTable, WeightError> {
    let tau = grid.tau().ok_or(WeightError::NonUniformGrid)?;
    let n = grid.steps();
    let mut q = Vec::with_capacity(n);
    q.push(tau.powf(-g));
    for k in 1..n {
        let prev = q[k - 1];
        q.push(prev * (k as f64 - g) / k as f64);
    }
    let l = l_sequence(g, &grid.nodes, q[0]);
    Ok(WeightTable { scheme: TimeScheme::Fbdf, order: g, raw: grunwald_weights(g, tau, n), q, l })
}

/// Uniform PI table: `Q_n = [(n+1)^{1-g} - n^{1-g}] tau^{-g} / Γ(2-g)`.
pub fn pi_q_uniform(g: f64, grid: &TimeGrid) -> Result<WeightTable, WeightError> {
    let tau = grid.tau().ok_or(WeightError::NonUniformGrid)?;
    let n = grid.steps();
    let scale = tau.powf(-g) * rgamma(2.0 - g);
    let q: Vec<f64> = (0..n).map(|k| pow_diff(k as f64, 1.0 - g) * scale).collect();
    let l = l_sequence(g, &grid.nodes, q[0]);
    // raw k_j^g of the product rule: consecutive differences of (j τ)^{1-g}
    let raw = q.iter().map(|v| v * gamma(1.0 - g)).collect();
    Ok(WeightTable { scheme: TimeScheme::Pi, order: g, q, l, raw })
}

/// Per-step PI weights on an arbitrary grid:
/// `Q~_j = [(t_n - t_{n-1-j})^{1-g} - (t_n - t_{n-j})^{1-g}] / (Γ(2-g) τ_{n-1-j})`
/// for `j = 0..n-1`.
pub fn pi_q(g: f64, grid: &TimeGrid, n: usize) -> Result<Vec<f64>, WeightError> {
    if n == 0 || n > grid.steps() {
        return Err(WeightError::StepOutOfRange { n, max: grid.steps() });
    }
    let tn = grid.t(n);
    let r = rgamma(2.0 - g);
    let e = 1.0 - g;
    Ok((0..n)
        .map(|j| {
            let a = tn - grid.t(n - 1 - j);
            let b = tn - grid.t(n - j);
            let h = grid.step(n - j);
            let diff = if b == 0.0 { a.powf(e) } else { b.powf(e) * (e * (h / b).ln_1p()).exp_m1() };
            diff * r / h
        })
        .collect())
}

/// Decay factor of the substantial operator between two times.
#[derive(Debug, Clone, Copy)]
pub enum Decay<'a> {
    /// Constant `pU`: factor `exp(-pU dt)`.
    Scalar(C64),
    /// Per-entry `pU` values, applied elementwise.
    Field(&'a [C64]),
}

impl Decay<'_> {
    fn factor(&self, i: usize, dt: f64) -> C64 {
        match self {
            Decay::Scalar(pu) => (-pu * dt).exp(),
            Decay::Field(v) => (-v[i] * dt).exp(),
        }
    }
}

/// `Σ_{l<n} e_l (Q_l - Q_{l-1}) V_{n-l} + e_n (L - Q_{n-1}) V_0` with
/// `e_l = exp(-pU (t_n - t_{n-l}))`. `q` holds `Q_0..Q_{n-1}` for step `n`;
/// `l_n = None` gives the plain (Caputo) form, `Some(L_n)` the corrected one.
pub fn substantial_apply(
    q: &[f64],
    l_n: Option<f64>,
    grid: &TimeGrid,
    decay: Decay<'_>,
    history: &[Vec<C64>],
    n: usize,
) -> Result<Vec<C64>, WeightError> {
    if history.len() < n + 1 || q.len() < n {
        return Err(WeightError::ShortHistory { n, got: history.len(), need: n + 1 });
    }
    let dim = history[0].len();
    let tn = grid.t(n);
    let mut out = vec![C64::new(0.0, 0.0); dim];
    for l in 0..n {
        let c = if l == 0 { q[0] } else { q[l] - q[l - 1] };
        let dt = tn - grid.t(n - l);
        for (i, o) in out.iter_mut().enumerate() {
            *o += decay.factor(i, dt) * c * history[n - l][i];
        }
    }
    let last = if n == 0 { 0.0 } else { q[n - 1] };
    let c0 = l_n.unwrap_or(0.0) - last;
    if c0 != 0.0 {
        for (i, o) in out.iter_mut().enumerate() {
            *o += decay.factor(i, tn) * c0 * history[0][i];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grunwald_half_order() {
        let w = grunwald_weights(0.5, 1.0, 3);
        for (a, b) in w.iter().zip([1.0, -0.5, -0.125, -0.0625]) {
            assert!((a - b).abs() < 1e-15);
        }
        let w = grunwald_weights(1.0, 0.1, 3);
        assert!((w[0] - 10.0).abs() < 1e-12 && (w[1] + 10.0).abs() < 1e-12 && w[2].abs() < 1e-14);
    }

    #[test]
    fn grunwald_partial_sum() {
        let w = grunwald_weights(0.5, 1.0, 20);
        let s: f64 = w.iter().sum();
        let want: f64 = (1..=20).map(|m| (m as f64 - 0.5) / m as f64).product();
        assert!((s - want).abs() < 1e-12);
    }

    #[test]
    fn fbdf_and_pi_tables() {
        let grid = TimeGrid::uniform(4.0, 4).unwrap();
        let f = fbdf_q(0.5, &grid).unwrap();
        for (a, b) in f.q.iter().zip([1.0, 0.5, 0.375, 0.3125]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((f.l[1] - 0.564_189_583_547_756_3).abs() < 1e-14);
        let p = pi_q_uniform(0.5, &grid).unwrap();
        for (a, b) in p.q.iter().zip([1.128_379_167_095_512_6, 0.467_389_954_510_218_25, 0.358_640_926_005_948_7]) {
            assert!((a - b).abs() < 1e-14, "{a} vs {b}");
        }
        let per_step = pi_q(0.5, &grid, 4).unwrap();
        for (a, b) in per_step.iter().zip(&p.q) {
            assert!((a - b).abs() < 1e-13);
        }
        assert_eq!(fbdf_q(0.5, &TimeGrid::graded(1.0, 4, 2.0).unwrap()).unwrap_err(), WeightError::NonUniformGrid);
    }

    #[test]
    fn pi_weights_vanish_order() {
        let grid = TimeGrid::graded(1.0, 8, 2.0).unwrap();
        let q = pi_q(1e-9, &grid, 8).unwrap();
        assert!(q.iter().all(|v| (v - 1.0).abs() < 1e-7));
    }

    #[test]
    fn empty_history_contributes_nothing() {
        let grid = TimeGrid::uniform(1.0, 4).unwrap();
        let hist = vec![vec![C64::new(1.0, 0.0); 3]];
        let v = substantial_apply(&[], None, &grid, Decay::Scalar(C64::new(0.0, 0.0)), &hist, 0).unwrap();
        assert!(v.iter().all(|z| z.norm() == 0.0));
    }
}
