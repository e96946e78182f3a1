//! Browser bindings: one solve, the computed profile against the exact
//! solution, and the memory weights of a time scheme.
//!
//! Each export has a plain Rust twin returning `Result<_, String>` so the
//! logic is testable off the browser.

use feynkac::bspline::SplineSpace;
use feynkac::fracweights::{fbdf_q, pi_q_uniform, TimeGrid};
use feynkac::problem::{registry_get, ProblemSpec};
use feynkac::stepper::{run, Discretization, Scheme, SolveReport};
use feynkac::C64;
use wasm_bindgen::prelude::*;

/// Longest run the page accepts; keeps the tab responsive.
pub const MAX_WORK: usize = 1 << 22;

/// Parameters of one 1D run, as entered on the page.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub case: String,
    pub scheme: String,
    pub alpha: f64,
    pub gamma: f64,
    pub p_re: f64,
    pub p_im: f64,
    pub d: usize,
    pub level: usize,
    pub steps: usize,
}

struct Prepared {
    problem: ProblemSpec,
    disc: Discretization,
}

fn prepare(p: &Params) -> Result<Prepared, String> {
    let scheme: Scheme = p.scheme.parse()?;
    if p.level > 12 {
        return Err(format!("J = {} is too fine for the browser (max 12)", p.level));
    }
    if p.steps == 0 || p.steps.saturating_mul(1 << p.level) > MAX_WORK {
        return Err(format!("N = {} with J = {} is too large for the browser", p.steps, p.level));
    }
    let case = registry_get(&p.case, 2.0).map_err(|e| e.to_string())?;
    if case.name.dim() != 1 {
        return Err(format!("{} is two-dimensional; the page runs 1D cases only", p.case));
    }
    let problem = ProblemSpec::new(case, p.alpha, p.gamma, C64::new(p.p_re, p.p_im), 0.5, None).map_err(|e| e.to_string())?;
    let grid = TimeGrid::uniform(problem.t_end, p.steps).map_err(|e| e.to_string())?;
    Ok(Prepared { problem, disc: Discretization::new(p.d, p.level, grid, scheme) })
}

fn solve_prepared(pr: &Prepared) -> Result<SolveReport, String> {
    run(&pr.problem, &pr.disc).map_err(|e| e.to_string())
}

/// `[err2, err1, maxerr]`; `err1` is NaN for collocation.
pub fn errors(p: &Params) -> Result<Vec<f64>, String> {
    let r = solve_prepared(&prepare(p)?)?;
    Ok(vec![r.err2, r.err1, r.maxerr])
}

/// Final-time samples as rows `[x, Re u_h, Im u_h, Re u, Im u]`, flattened.
pub fn profile(p: &Params, samples: usize) -> Result<Vec<f64>, String> {
    if samples < 2 {
        return Err("need at least 2 samples".into());
    }
    let pr = prepare(p)?;
    let r = solve_prepared(&pr)?;
    let space = SplineSpace::new(pr.disc.d, pr.disc.level, pr.disc.coarsest).map_err(|e| e.to_string())?;
    let t = pr.problem.t_end;
    let mut out = Vec::with_capacity(5 * samples);
    for k in 0..samples {
        let x = k as f64 / (samples - 1) as f64;
        let uh = space.combine(&r.coeffs, x);
        let u = pr.problem.exact(x, t);
        out.extend([x, uh.re, uh.im, u.re, u.im]);
    }
    Ok(out)
}

/// First `count` memory weights `Q_0, Q_1, ...` of FBDF or PI on a uniform grid of `steps` steps over [0, 1].
pub fn memory_weights(rule: &str, gamma: f64, steps: usize, count: usize) -> Result<Vec<f64>, String> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(format!("gamma = {gamma} violates 0 < gamma < 1"));
    }
    if steps > 1 << 16 {
        return Err(format!("N = {steps} is too large for the browser"));
    }
    let grid = TimeGrid::uniform(1.0, steps).map_err(|e| e.to_string())?;
    let table = match rule.to_ascii_uppercase().as_str() {
        "FBDF" => fbdf_q(gamma, &grid),
        "PI" => pi_q_uniform(gamma, &grid),
        _ => return Err(format!("unknown rule '{rule}'; use FBDF or PI")),
    }
    .map_err(|e| e.to_string())?;
    Ok(table.q.into_iter().take(count).collect())
}

#[allow(clippy::too_many_arguments)]
fn params(case: String, scheme: String, alpha: f64, gamma: f64, p_re: f64, p_im: f64, d: usize, level: usize, steps: usize) -> Params {
    Params { case, scheme, alpha, gamma, p_re, p_im, d, level, steps }
}

#[wasm_bindgen(js_name = errors)]
#[allow(clippy::too_many_arguments)]
pub fn errors_js(
    case: String,
    scheme: String,
    alpha: f64,
    gamma: f64,
    p_re: f64,
    p_im: f64,
    d: usize,
    level: usize,
    steps: usize,
) -> Result<Vec<f64>, JsError> {
    errors(&params(case, scheme, alpha, gamma, p_re, p_im, d, level, steps)).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = profile)]
#[allow(clippy::too_many_arguments)]
pub fn profile_js(
    case: String,
    scheme: String,
    alpha: f64,
    gamma: f64,
    p_re: f64,
    p_im: f64,
    d: usize,
    level: usize,
    steps: usize,
    samples: usize,
) -> Result<Vec<f64>, JsError> {
    profile(&params(case, scheme, alpha, gamma, p_re, p_im, d, level, steps), samples).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = memoryWeights)]
pub fn memory_weights_js(rule: &str, gamma: f64, steps: usize, count: usize) -> Result<Vec<f64>, JsError> {
    memory_weights(rule, gamma, steps, count).map_err(|e| JsError::new(&e))
}
