//! Gaussian rules on (-1, 1) and weakly singular fractional inner products.
//!
//! Nodes come from the Golub-Welsch eigenvalue problem for the Jacobi matrix
//! of the weight `(1 - x)^a (1 + x)^b`.

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

use crate::special::{gamma, ln_gamma, rgamma};

#[derive(Debug, Error, PartialEq)]
pub enum QuadError {
    #[error("Jacobi exponents must exceed -1 (got a={a}, b={b})")]
    BadExponent { a: f64, b: f64 },
    #[error("a quadrature rule needs at least one node")]
    NoNodes,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Legendre,
    Jacobi { a: f64, b: f64 },
}

/// Nodes in increasing order with positive weights.
#[derive(Debug, Clone)]
pub struct QuadRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub family: Family,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrate `f` against the rule's weight on (-1, 1).
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// The rule mapped to (0, 1): nodes `(x+1)/2`, weights rescaled for the
    /// weight `(1-s)^a s^b` on (0, 1).
    pub fn unit_interval(&self) -> (Vec<f64>, Vec<f64>) {
        let (a, b) = match self.family {
            Family::Legendre => (0.0, 0.0),
            Family::Jacobi { a, b } => (a, b),
        };
        let scale = 0.5f64.powf(1.0 + a + b);
        let nodes = self.nodes.iter().map(|x| 0.5 * (x + 1.0)).collect();
        let weights = self.weights.iter().map(|w| w * scale).collect();
        (nodes, weights)
    }
}

pub fn gauss_legendre(n: usize) -> QuadRule {
    let mut r = gauss_jacobi(n, 0.0, 0.0).expect("legendre exponents are valid");
    r.family = Family::Legendre;
    r
}

/// Gauss rule exact for `p(x) (1-x)^a (1+x)^b` with `deg p <= 2n-1`.
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> Result<QuadRule, QuadError> {
    if a <= -1.0 || b <= -1.0 {
        return Err(QuadError::BadExponent { a, b });
    }
    if n == 0 {
        return Err(QuadError::NoNodes);
    }
    let ab = a + b;
    let mu0 = ((ab + 1.0) * std::f64::consts::LN_2 + ln_gamma(a + 1.0) + ln_gamma(b + 1.0)
        - ln_gamma(ab + 2.0))
    .exp();
    let mut t = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let diag = if k == 0 {
            (b - a) / (ab + 2.0)
        } else {
            let s = 2.0 * kf + ab;
            (b * b - a * a) / (s * (s + 2.0))
        };
        t[(k, k)] = diag;
        if k + 1 < n {
            let m = kf + 1.0;
            let s = 2.0 * m + ab;
            let beta = if m == 1.0 {
                4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                4.0 * m * (m + a) * (m + b) * (m + ab) / (s * s * (s + 1.0) * (s - 1.0))
            };
            t[(k, k + 1)] = beta.sqrt();
            t[(k + 1, k)] = beta.sqrt();
        }
    }
    let eig = SymmetricEigen::new(t);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let (mut nodes, mut weights): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    polish(&mut nodes, &mut weights, a, b, mu0);
    Ok(QuadRule {
        nodes,
        weights,
        family: Family::Jacobi { a, b },
    })
}

/// Newton refinement of the nodes on the Jacobi polynomial, then weights from
/// the Christoffel formula. Keeps the eigenvalue weights if anything misbehaves.
fn polish(nodes: &mut [f64], weights: &mut [f64], a: f64, b: f64, mu0: f64) {
    let n = nodes.len();
    let mut new_nodes = nodes.to_vec();
    for x in new_nodes.iter_mut() {
        for _ in 0..3 {
            let (p, dp, _) = jacobi_eval(n, a, b, *x);
            if dp == 0.0 {
                break;
            }
            let dx = p / dp;
            *x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
    }
    let ok = new_nodes
        .iter()
        .zip(nodes.iter())
        .all(|(u, v)| (u - v).abs() < 1e-10);
    if !ok {
        return;
    }
    // w_i = mu0 / sum_k p_k(x_i)^2 with orthonormal p_k
    let mut new_w = Vec::with_capacity(n);
    for &x in &new_nodes {
        let s = orthonormal_sq_sum(n, a, b, x, mu0);
        new_w.push(1.0 / s);
    }
    let ok_w = new_w
        .iter()
        .zip(weights.iter())
        .all(|(u, v)| ((u - v) / v).abs() < 1e-8);
    if ok_w {
        nodes.copy_from_slice(&new_nodes);
        weights.copy_from_slice(&new_w);
    }
}

/// Monic Jacobi polynomial of degree n, its derivative, and degree n-1 value.
fn jacobi_eval(n: usize, a: f64, b: f64, x: f64) -> (f64, f64, f64) {
    let ab = a + b;
    let mut p_prev = 1.0;
    let mut p = x - (b - a) / (ab + 2.0);
    let mut dp_prev = 0.0;
    let mut dp = 1.0;
    if n == 1 {
        return (p, dp, p_prev);
    }
    for k in 1..n {
        let kf = k as f64;
        let s = 2.0 * kf + ab;
        let alpha = (b * b - a * a) / (s * (s + 2.0));
        let beta = if k == 1 {
            4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))
        } else {
            4.0 * kf * (kf + a) * (kf + b) * (kf + ab) / (s * s * (s + 1.0) * (s - 1.0))
        };
        let p_next = (x - alpha) * p - beta * p_prev;
        let dp_next = p + (x - alpha) * dp - beta * dp_prev;
        p_prev = p;
        p = p_next;
        dp_prev = dp;
        dp = dp_next;
    }
    (p, dp, p_prev)
}

fn orthonormal_sq_sum(n: usize, a: f64, b: f64, x: f64, mu0: f64) -> f64 {
    let ab = a + b;
    // orthonormal three-term recurrence
    let mut q_prev = 0.0;
    let mut q = 1.0 / mu0.sqrt();
    let mut sum = q * q;
    let mut sqrt_beta_prev = 0.0;
    for k in 0..n - 1 {
        let kf = k as f64;
        let alpha = if k == 0 {
            (b - a) / (ab + 2.0)
        } else {
            let s = 2.0 * kf + ab;
            (b * b - a * a) / (s * (s + 2.0))
        };
        let m = kf + 1.0;
        let s = 2.0 * m + ab;
        let beta = if k == 0 {
            4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))
        } else {
            4.0 * m * (m + a) * (m + b) * (m + ab) / (s * s * (s + 1.0) * (s - 1.0))
        };
        let sb = beta.sqrt();
        let q_next = ((x - alpha) * q - sqrt_beta_prev * q_prev) / sb;
        q_prev = q;
        q = q_next;
        sqrt_beta_prev = sb;
        sum += q * q;
    }
    sum
}

/// Exact moment `∫_{-1}^{1} (1-x)^a (1+x)^b x^m dx`, used to check rules.
pub fn jacobi_moment(a: f64, b: f64, m: usize) -> f64 {
    // (a+b+k+2) M_{k+1} = (b-a) M_k + k M_{k-1}
    let mut prev = 0.0;
    let mut cur = jacobi_mass(a, b);
    for k in 0..m {
        let next = ((b - a) * cur + k as f64 * prev) / (a + b + k as f64 + 2.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `∫_0^b (₀D^{-(2-α)} h1)(x) h2(x) dx` via a tensor Gauss-Jacobi rule.
pub fn singular_inner_left<F, G>(h1: F, h2: G, alpha: f64, b: f64, n: usize) -> f64
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    if alpha >= 2.0 {
        let gl = gauss_legendre(n);
        return 0.5 * b * gl.integrate(|xi| h1(0.5 * b * (xi + 1.0)) * h2(0.5 * b * (xi + 1.0)));
    }
    let outer = gauss_jacobi(n, 0.0, 2.0 - alpha).expect("valid exponent");
    let inner = gauss_jacobi(n, 1.0 - alpha, 0.0).expect("valid exponent");
    let pref = 2f64.powf(2.0 * alpha - 5.0) * b.powf(3.0 - alpha) * rgamma(2.0 - alpha);
    let total = outer.integrate(|xi| {
        let x = 0.5 * (xi + 1.0) * b;
        let s = inner.integrate(|eta| h1(0.25 * (eta + 1.0) * (xi + 1.0) * b));
        h2(x) * s
    });
    pref * total
}

/// `∫_a^1 (ₓD_1^{-(2-α)} h1)(x) h2(x) dx`, the mirror image of the left form.
pub fn singular_inner_right<F, G>(h1: F, h2: G, alpha: f64, a: f64, n: usize) -> f64
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    singular_inner_left(|y| h1(1.0 - y), |y| h2(1.0 - y), alpha, 1.0 - a, n)
}

/// Total mass of the Jacobi weight, `∫(1-x)^a(1+x)^b dx`.
pub fn jacobi_mass(a: f64, b: f64) -> f64 {
    2f64.powf(a + b + 1.0) * gamma(a + 1.0) * gamma(b + 1.0) * rgamma(a + b + 2.0)
}
