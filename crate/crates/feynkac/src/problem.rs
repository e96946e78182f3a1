//! Continuous problems: parameters, potentials and the manufactured test
//! cases with their forcings.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::special::{gamma, rgamma};
use crate::C64;

#[derive(Debug, Error, PartialEq)]
pub enum ProblemError {
    #[error("alpha = {0} violates 1 < alpha <= 2")]
    Alpha(f64),
    #[error("gamma = {0} violates 0 < gamma < 1")]
    Gamma(f64),
    #[error("diffusion coefficient K = {0} must be positive")]
    Diffusion(f64),
    #[error("final time T = {0} must be positive")]
    Horizon(f64),
    #[error("Re(p U(x)) must be nonnegative; found {0} at x = {1}")]
    Decay(f64, f64),
    #[error("unknown case '{0}'; valid names: ex41, ex42, ex43, ex43_colloc, ex44")]
    UnknownCase(String),
    #[error("case {case} has no {form} forcing")]
    NoForcing { case: CaseName, form: &'static str },
}

/// Which endpoint a power singularity sits at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

/// `coef * x^exponent` (left) or `coef * (1-x)^exponent` (right).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerPart {
    pub coef: C64,
    pub exponent: f64,
    pub side: Side,
}

impl PowerPart {
    pub fn eval(&self, x: f64) -> C64 {
        let base = match self.side {
            Side::Left => x,
            Side::Right => 1.0 - x,
        };
        self.coef * base.powf(self.exponent)
    }
}

/// A space function at fixed time: smooth part plus endpoint power terms.
pub struct Forcing<'a> {
    pub smooth: Box<dyn Fn(f64) -> C64 + 'a>,
    pub powers: Vec<PowerPart>,
}

impl Forcing<'_> {
    pub fn eval(&self, x: f64) -> C64 {
        (self.smooth)(x) + self.powers.iter().map(|p| p.eval(x)).sum::<C64>()
    }
}

#[derive(Clone)]
pub enum Potential {
    Constant(f64),
    /// `U(x) = x`.
    Linear,
    Callable(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Potential::Constant(c) => write!(f, "Constant({c})"),
            Potential::Linear => write!(f, "Linear"),
            Potential::Callable(_) => write!(f, "Callable"),
        }
    }
}

impl Potential {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Potential::Constant(c) => *c,
            Potential::Linear => x,
            Potential::Callable(f) => f(x),
        }
    }

    /// `U'(x)`; central differences for callables.
    pub fn deriv(&self, x: f64) -> f64 {
        match self {
            Potential::Constant(_) => 0.0,
            Potential::Linear => 1.0,
            Potential::Callable(f) => {
                let h = 1e-6;
                (f(x + h) - f(x - h)) / (2.0 * h)
            }
        }
    }

    pub fn constant(&self) -> Option<f64> {
        match self {
            Potential::Constant(c) => Some(*c),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseName {
    Ex41,
    Ex42,
    Ex43,
    Ex43Colloc,
    Ex44,
}

impl CaseName {
    pub const ALL: [CaseName; 5] = [CaseName::Ex41, CaseName::Ex42, CaseName::Ex43, CaseName::Ex43Colloc, CaseName::Ex44];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseName::Ex41 => "ex41",
            CaseName::Ex42 => "ex42",
            CaseName::Ex43 => "ex43",
            CaseName::Ex43Colloc => "ex43_colloc",
            CaseName::Ex44 => "ex44",
        }
    }

    pub fn potential(self) -> Potential {
        match self {
            CaseName::Ex41 | CaseName::Ex42 => Potential::Constant(1.0),
            _ => Potential::Linear,
        }
    }

    pub fn dim(self) -> usize {
        if self == CaseName::Ex42 {
            2
        } else {
            1
        }
    }
}

impl fmt::Display for CaseName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseName {
    type Err = ProblemError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CaseName::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| ProblemError::UnknownCase(s.to_string()))
    }
}

/// Manufactured case: name plus the time exponent of its exact solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedCase {
    pub name: CaseName,
    pub sigma: f64,
}

pub fn registry_get(name: &str, sigma: f64) -> Result<ManufacturedCase, ProblemError> {
    Ok(ManufacturedCase { name: name.parse()?, sigma })
}

/// Which equation the forcing belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForcingForm {
    /// Backward equation with the Riemann-Liouville substantial derivative.
    Backward,
    /// Equivalent Caputo form.
    Equivalent,
    /// Forward equation.
    Forward,
}

impl ForcingForm {
    fn label(self) -> &'static str {
        match self {
            ForcingForm::Backward => "backward",
            ForcingForm::Equivalent => "equivalent",
            ForcingForm::Forward => "forward",
        }
    }
}

/// Power-series terms `(coef, exponent)` of `₀D^α sin(πx)`, i.e.
/// `Σ_k (-1)^k π^{2k+1} x^{2k+1-α} / Γ(2k+2-α)`; at most 40 terms, stopping
/// once a coefficient drops below `tol`. Zero coefficients are skipped.
pub fn riesz_sin_terms(alpha: f64, tol: f64) -> Vec<(f64, f64)> {
    let pi = std::f64::consts::PI;
    let mut out = Vec::new();
    for k in 0..40 {
        let kf = k as f64;
        let c = (-1f64).powi(k) * pi.powf(2.0 * kf + 1.0) * rgamma(2.0 * kf + 2.0 - alpha);
        if c != 0.0 {
            out.push((c, 2.0 * kf + 1.0 - alpha));
        }
        if k > 0 && c.abs() < tol {
            break;
        }
    }
    out
}

/// `₀D^α sin(πx) + ₓD^α sin(πx)` by the truncated series.
pub fn riesz_sin_series(alpha: f64, x: f64, tol: f64) -> f64 {
    riesz_sin_terms(alpha, tol)
        .iter()
        .map(|(c, e)| c * (x.powf(*e) + (1.0 - x).powf(*e)))
        .sum()
}

/// `Γ(m+1)/Γ(m+1-α)`, the factor in `₀D^α x^m`.
pub fn monomial_factor(m: f64, alpha: f64) -> f64 {
    gamma(m + 1.0) * rgamma(m + 1.0 - alpha)
}

/// Polynomial coefficients `c[m]` of `e^{z x} (x^3 - x)` in powers of `x`
/// and of `1 - x`, truncated once terms fall below machine precision.
fn exp_cubic_series(z: C64) -> (Vec<C64>, Vec<C64>) {
    let max_terms = 12 + (3.0 * z.norm()).ceil() as usize + 40;
    let mut powk = vec![C64::new(1.0, 0.0)];
    let mut negk = vec![C64::new(1.0, 0.0)];
    for k in 1..max_terms {
        powk.push(powk[k - 1] * z / k as f64);
        negk.push(negk[k - 1] * (-z) / k as f64);
    }
    let get = |v: &Vec<C64>, k: isize| if k < 0 { C64::new(0.0, 0.0) } else { v[k as usize] };
    let mut left = vec![C64::new(0.0, 0.0); max_terms];
    let mut right = vec![C64::new(0.0, 0.0); max_terms];
    let ez = z.exp();
    for m in 1..max_terms {
        let mi = m as isize;
        left[m] = get(&powk, mi - 3) - get(&powk, mi - 1);
        // x^3 - x = -2y + 3y^2 - y^3 with y = 1 - x, and e^{zx} = e^z e^{-zy}
        right[m] = ez * (get(&negk, mi - 1) * -2.0 + get(&negk, mi - 2) * 3.0 - get(&negk, mi - 3));
    }
    let trim = |v: &mut Vec<C64>| {
        let peak = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
        while v.len() > 4 && v.last().map_or(false, |c| c.norm() < 1e-18 * peak.max(1.0)) {
            v.pop();
        }
    };
    trim(&mut left);
    trim(&mut right);
    (left, right)
}

/// Riemann-Liouville derivative `D^mu` of `e^{c t} t^beta` at `t > 0` by
/// its power series.
fn exp_power_frac(c: C64, beta: f64, mu: f64, t: f64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    let mut cm = C64::new(1.0, 0.0);
    let limit = 30 + (4.0 * c.norm() * t).ceil() as usize;
    for m in 0..limit {
        let b = beta + m as f64;
        let term = cm * (gamma(b + 1.0) * rgamma(b + 1.0 - mu) * t.powf(b - mu));
        acc += term;
        cm = cm * c / (m as f64 + 1.0);
        if m > 5 && term.norm() < 1e-17 * acc.norm() {
            break;
        }
    }
    acc
}

/// A fully specified continuous problem.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub case: ManufacturedCase,
    pub alpha: f64,
    pub gamma: f64,
    pub k: f64,
    pub p: C64,
    pub potential: Potential,
    pub t_end: f64,
    pub series_tol: f64,
}

/// `-2 cos(απ/2)`, the coefficient that turns `K ∇^α` into `₀D^α + ₓD^α`.
pub fn default_diffusion(alpha: f64) -> f64 {
    -2.0 * (alpha * std::f64::consts::FRAC_PI_2).cos()
}

impl ProblemSpec {
    /// `k = None` picks 1 for the 2D case and `-2 cos(απ/2)` otherwise.
    pub fn new(
        case: ManufacturedCase,
        alpha: f64,
        gamma_: f64,
        p: C64,
        t_end: f64,
        k: Option<f64>,
    ) -> Result<Self, ProblemError> {
        if !(alpha > 1.0 && alpha <= 2.0) {
            return Err(ProblemError::Alpha(alpha));
        }
        if !(gamma_ > 0.0 && gamma_ < 1.0) {
            return Err(ProblemError::Gamma(gamma_));
        }
        if !(t_end > 0.0) {
            return Err(ProblemError::Horizon(t_end));
        }
        let k = k.unwrap_or(if case.name == CaseName::Ex42 { 1.0 } else { default_diffusion(alpha) });
        if !(k > 0.0) {
            return Err(ProblemError::Diffusion(k));
        }
        let potential = case.name.potential();
        for i in 0..=64 {
            let x = i as f64 / 64.0;
            let re = (p * potential.eval(x)).re;
            if re < 0.0 {
                return Err(ProblemError::Decay(re, x));
            }
        }
        Ok(ProblemSpec { case, alpha, gamma: gamma_, k, p, potential, t_end, series_tol: 1e-14 })
    }

    pub fn name(&self) -> CaseName {
        self.case.name
    }

    /// `K / (-2 cos(απ/2))`: scales `₀D^α + ₓD^α` to `K ∇^α`.
    pub fn riesz_scale(&self) -> f64 {
        self.k / default_diffusion(self.alpha)
    }

    fn pu(&self, x: f64) -> C64 {
        self.p * self.potential.eval(x)
    }

    pub fn exact(&self, x: f64, t: f64) -> C64 {
        let s = self.case.sigma;
        let ts = t.powf(s);
        match self.case.name {
            CaseName::Ex41 => (-self.pu(x) * t).exp() * (ts + 1.0) * (std::f64::consts::PI * x).sin(),
            CaseName::Ex42 => self.exact_2d(x, 0.5, t),
            CaseName::Ex43 | CaseName::Ex44 => (-self.pu(x) * t).exp() * (ts + 5.0) * (x * x * x - x),
            CaseName::Ex43Colloc => C64::new((ts + 5.0) * (x * x * x - x * x * x * x), 0.0),
        }
    }

    pub fn exact_deriv(&self, x: f64, t: f64) -> C64 {
        let s = self.case.sigma;
        let ts = t.powf(s);
        let pi = std::f64::consts::PI;
        match self.case.name {
            CaseName::Ex41 => (-self.pu(x) * t).exp() * (ts + 1.0) * pi * (pi * x).cos(),
            CaseName::Ex43 | CaseName::Ex44 => {
                let e = (-self.p * x * t).exp();
                let xx = x * x * x - x;
                e * (ts + 5.0) * ((3.0 * x * x - 1.0) - self.p * t * xx)
            }
            CaseName::Ex43Colloc => C64::new((ts + 5.0) * (3.0 * x * x - 4.0 * x * x * x), 0.0),
            CaseName::Ex42 => C64::new(0.0, 0.0),
        }
    }

    /// `e^{-pUt} t^{2+γ} x(1-x)^2 y^2(1-y)`.
    pub fn exact_2d(&self, x: f64, y: f64, t: f64) -> C64 {
        self.exact_2d_time(t) * (x * (1.0 - x).powi(2) * y * y * (1.0 - y))
    }

    /// Time factor `e^{-pUt} t^{2+γ}` of the separable 2D solution.
    pub fn exact_2d_time(&self, t: f64) -> C64 {
        let pu = self.p * self.potential.constant().unwrap_or(1.0);
        (-pu * t).exp() * t.powf(2.0 + self.gamma)
    }

    pub fn initial(&self, x: f64) -> C64 {
        self.exact(x, 0.0)
    }

    fn sin_part(&self) -> Vec<PowerPart> {
        let scale = self.riesz_scale();
        let mut out = Vec::new();
        for (c, e) in riesz_sin_terms(self.alpha, self.series_tol) {
            for side in [Side::Left, Side::Right] {
                out.push(PowerPart { coef: C64::new(c * scale, 0.0), exponent: e, side });
            }
        }
        out
    }

    /// `K ∇^α [e^{-p t x} (x^3 - x)]` as power terms.
    fn exp_cubic_part(&self, t: f64, factor: C64) -> Vec<PowerPart> {
        let (left, right) = exp_cubic_series(-self.p * t);
        let scale = self.riesz_scale();
        let mut out = Vec::new();
        for (coefs, side) in [(left, Side::Left), (right, Side::Right)] {
            for (m, c) in coefs.iter().enumerate().skip(1) {
                let f = monomial_factor(m as f64, self.alpha);
                if f == 0.0 || c.norm() == 0.0 {
                    continue;
                }
                out.push(PowerPart { coef: factor * *c * (f * scale), exponent: m as f64 - self.alpha, side });
            }
        }
        out
    }

    /// Forcing at time `t > 0` for the given equation form.
    pub fn forcing(&self, form: ForcingForm, t: f64) -> Result<Forcing<'_>, ProblemError> {
        let s = self.case.sigma;
        let g = self.gamma;
        let pi = std::f64::consts::PI;
        let none = || ProblemError::NoForcing { case: self.case.name, form: form.label() };
        match (self.case.name, form) {
            (CaseName::Ex41, ForcingForm::Backward) => {
                let e = (-self.pu(0.0) * t).exp();
                let a = e * s * t.powf(s - 1.0);
                let r = gamma(s + 1.0) * rgamma(s + g) * t.powf(s + g - 1.0) + t.powf(g - 1.0) * rgamma(g);
                let powers = self.sin_part().into_iter().map(|p| PowerPart { coef: -p.coef * e * r, ..p }).collect();
                Ok(Forcing { smooth: Box::new(move |x| a * (pi * x).sin()), powers })
            }
            (CaseName::Ex41, ForcingForm::Equivalent) => {
                let e = (-self.pu(0.0) * t).exp();
                let a = e * gamma(s + 1.0) * rgamma(s + 1.0 - g) * t.powf(s - g);
                let b = e * (t.powf(s) + 1.0);
                let powers = self.sin_part().into_iter().map(|p| PowerPart { coef: -p.coef * b, ..p }).collect();
                Ok(Forcing { smooth: Box::new(move |x| a * (pi * x).sin()), powers })
            }
            (CaseName::Ex43, ForcingForm::Equivalent) => {
                let a = gamma(s + 1.0) * rgamma(s + 1.0 - g) * t.powf(s - g);
                let p = self.p;
                let powers = self.exp_cubic_part(t, C64::new(-(t.powf(s) + 5.0), 0.0));
                Ok(Forcing { smooth: Box::new(move |x| (-p * x * t).exp() * a * (x * x * x - x)), powers })
            }
            (CaseName::Ex44, ForcingForm::Forward) => {
                let a = s * t.powf(s - 1.0);
                let r = gamma(s + 1.0) * rgamma(s + g) * t.powf(s + g - 1.0) + 5.0 * t.powf(g - 1.0) * rgamma(g);
                let p = self.p;
                let powers = self.exp_cubic_part(t, C64::new(-r, 0.0));
                Ok(Forcing { smooth: Box::new(move |x| (-p * x * t).exp() * a * (x * x * x - x)), powers })
            }
            (CaseName::Ex43Colloc, ForcingForm::Backward) => {
                let al = self.alpha;
                let scale = self.riesz_scale();
                let p = self.p;
                let mu = 1.0 - g;
                let ts = t.powf(s);
                let smooth = move |x: f64| {
                    let x2 = x * x * x - x * x * x * x;
                    let c = p * x;
                    let time = (-c * t).exp() * (exp_power_frac(c, s, mu, t) + exp_power_frac(c, 0.0, mu, t) * 5.0);
                    let left = monomial_factor(3.0, al) * x.powf(3.0 - al) - monomial_factor(4.0, al) * x.powf(4.0 - al);
                    let y = 1.0 - x;
                    let right: f64 = [(1.0, 1.0), (2.0, -3.0), (3.0, 3.0), (4.0, -1.0)]
                        .iter()
                        .map(|(m, c)| c * monomial_factor(*m, al) * y.powf(m - al))
                        .sum();
                    C64::new(s * t.powf(s - 1.0) * x2, 0.0) + c * (ts + 5.0) * x2 - time * ((left + right) * scale)
                };
                Ok(Forcing { smooth: Box::new(smooth), powers: Vec::new() })
            }
            _ => Err(none()),
        }
    }

    /// Separable 2D forcing `a(t) X Y + b(t) (D^α X · Y + X · D^α Y)`:
    /// returns `(a, b)`.
    pub fn forcing_2d_coefs(&self, t: f64) -> (C64, C64) {
        let pu = self.p * self.potential.constant().unwrap_or(1.0);
        let e = (-pu * t).exp();
        (e * (gamma(3.0 + self.gamma) / 2.0 * t * t), -e * (self.k * t.powf(2.0 + self.gamma)))
    }

    /// `X = x - 2x^2 + x^3` and `Y = y^2 - y^3` as monomial lists.
    pub fn forcing_2d_factors() -> ([(f64, f64); 3], [(f64, f64); 2]) {
        ([(1.0, 1.0), (-2.0, 2.0), (1.0, 3.0)], [(1.0, 2.0), (-1.0, 3.0)])
    }
}
