//! Parameter presets for the reference experiments, with their reference values.

use super::{CliError, Mesh, Metric, Reference, RunConfig};
use crate::stepper::{Scheme, SolverKind};
use crate::C64;

pub const TABLE_IDS: [&str; 9] = ["t1", "t2", "t3", "t4", "t5", "t6", "t7", "t8", "fig1"];

/// One run of a preset; rates are taken between consecutive runs of the same group.
#[derive(Debug, Clone)]
pub struct Preset {
    pub config: RunConfig,
    pub group: usize,
    pub reference: Option<Reference>,
}

const SCHEMES4: [&str; 4] = ["I-FBDF", "I-PI", "II-FBDF", "II-PI"];

struct Builder {
    scale: f64,
    group: usize,
    out: Vec<Preset>,
}

impl Builder {
    fn next_group(&mut self) {
        if !self.out.is_empty() {
            self.group += 1;
        }
    }

    fn push(&mut self, mut config: RunConfig, metric: Metric, value: Option<f64>) {
        if self.scale != 1.0 {
            config.steps = ((config.steps as f64 * self.scale).round() as usize).max(2);
        }
        let reference = value.filter(|_| self.scale == 1.0).map(|value| Reference { metric, value });
        self.out.push(Preset { config, group: self.group, reference });
    }
}

fn scheme(s: &str) -> Scheme {
    s.parse().expect("preset scheme")
}

fn ex41(alpha: f64, gamma: f64, p: f64, sigma: f64) -> RunConfig {
    RunConfig { case: "ex41".into(), alpha, gamma, p: C64::new(p, 0.0), sigma, ..RunConfig::default() }
}

fn t1(b: &mut Builder) {
    #[rustfmt::skip]
    let refs = [
        // gamma = 0.4: rows N = 40, 60, 80; columns I-FBDF, I-PI, II-FBDF, II-PI
        [[6.5141e-4, 1.2072e-4, 5.9163e-5, 5.4194e-6], [4.3413e-4, 6.8519e-5, 3.9451e-5, 2.8337e-6], [3.2553e-4, 4.5816e-5, 2.9582e-5, 1.7823e-6]],
        [[3.5561e-4, 1.1469e-5, 1.5873e-4, 6.8923e-5], [2.3722e-4, 5.5719e-6, 1.0591e-4, 4.2399e-5], [1.7796e-4, 3.3288e-6, 7.9456e-5, 3.0023e-5]],
    ];
    for (gi, gamma) in [0.4, 0.8].into_iter().enumerate() {
        for (si, s) in SCHEMES4.iter().enumerate() {
            b.next_group();
            for (ni, n) in [40, 60, 80].into_iter().enumerate() {
                let c = RunConfig { scheme: scheme(s), d: 2, level: 9, steps: n, ..ex41(1.6, gamma, 3.0, 2.0) };
                b.push(c, Metric::Err2, Some(refs[gi][ni][si]));
            }
        }
    }
}

fn t2(b: &mut Builder) {
    #[rustfmt::skip]
    let d2 = [[8.1510e-4, 8.4143e-4, 7.4549e-4, 7.6267e-4], [2.0346e-4, 2.0926e-4, 1.8564e-4, 1.8992e-4], [5.0855e-5, 5.2191e-5, 4.6337e-5, 4.6337e-5]];
    #[rustfmt::skip]
    let d3 = [[1.6566e-4, 1.1864e-4, 1.2261e-4, 1.1092e-4], [1.9311e-5, 1.2894e-5, 1.3849e-5, 1.2171e-5], [2.2987e-6, 1.4502e-6, 1.6078e-6, 1.3834e-6]];
    for (d, levels, refs) in [(2usize, [4usize, 5, 6], d2), (3, [3, 4, 5], d3)] {
        for (si, s) in SCHEMES4.iter().enumerate() {
            b.next_group();
            for (li, j) in levels.into_iter().enumerate() {
                let steps = 1usize << (d * j);
                let c = RunConfig { scheme: scheme(s), d, level: j, steps, ..ex41(1.2, 0.6, 3.0, 2.0) };
                b.push(c, Metric::Err1, Some(refs[li][si]));
            }
        }
    }
    // mixed-order regime, N = 2^(dJ) as above
    #[rustfmt::skip]
    let mixed = [
        (2, 0.4, [4.8153e-3, 1.3645e-3, 3.8919e-4], [4.3742e-3, 1.2314e-3, 3.4975e-4]),
        (2, 0.7, [2.8744e-3, 6.7345e-4, 1.5912e-4], [2.5524e-3, 5.9800e-4, 1.4137e-4]),
        (3, 0.2, [3.3202e-4, 5.0044e-5, 7.6693e-6], [3.1818e-4, 4.8008e-5, 7.3572e-6]),
        (3, 0.4, [1.9048e-4, 2.3496e-5, 2.9378e-6], [1.8400e-4, 2.2717e-5, 2.8386e-6]),
    ];
    for (d, gamma, pi, fbdf) in mixed {
        for (s, refs) in [("I-PI", pi), ("II-FBDF", fbdf)] {
            b.next_group();
            for (li, j) in [3usize, 4, 5].into_iter().enumerate() {
                let c = RunConfig { scheme: scheme(s), d, level: j, steps: 1 << (d * j), ..ex41(1.2, gamma, 3.0, 2.0) };
                b.push(c, Metric::Err1, Some(refs[li]));
            }
        }
    }
}

fn t3(b: &mut Builder) {
    #[rustfmt::skip]
    let rows = [
        ("II-PI", Mesh::Uniform, [[4.9355e-4, 4.0772e-4, 3.5354e-4], [4.0513e-5, 3.3468e-5, 2.9020e-5]]),
        ("II-PI", Mesh::Graded(2.0), [[2.5797e-4, 1.8862e-4, 1.4824e-4], [2.1176e-5, 1.5483e-5, 1.2168e-5]]),
        // scheme I PI is one-step per interval on the graded grid; grade 1 is its uniform baseline
        ("I-PI", Mesh::Graded(1.0), [[7.0536e-3, 6.2912e-3, 5.7783e-3], [5.7899e-4, 5.1642e-4, 4.7431e-4]]),
        ("I-PI", Mesh::Graded(2.0), [[3.6148e-3, 3.0007e-3, 2.6035e-3], [2.9672e-4, 2.4632e-4, 2.1371e-4]]),
    ];
    for (pi, p) in [0.0, 5.0].into_iter().enumerate() {
        for (s, mesh, refs) in rows {
            b.next_group();
            for (ni, n) in [60, 80, 100].into_iter().enumerate() {
                let c = RunConfig { scheme: scheme(s), d: 2, level: 9, steps: n, mesh, ..ex41(1.7, 0.8, p, 0.3) };
                b.push(c, Metric::Err2, Some(refs[pi][ni]));
            }
        }
    }
}

fn ex42(scheme_: &str, alpha: f64, gamma: f64, p: f64, d: usize, coarsest: usize) -> RunConfig {
    RunConfig {
        case: "ex42".into(),
        scheme: scheme(scheme_),
        alpha,
        gamma,
        p: C64::new(p, 0.0),
        d,
        coarsest: Some(coarsest),
        ..RunConfig::default()
    }
}

fn t4(b: &mut Builder) {
    #[rustfmt::skip]
    let blocks = [
        (1.5, 0.5, [46.0, 45.0], [30.3, 28.4], [7.5237e-6, 5.2053e-7]),
        (1.8, 0.6, [21.0, 28.0], [12.5, 18.0], [4.0444e-6, 2.5297e-7]),
    ];
    for (alpha, gamma, gm, bi, err) in blocks {
        for (solver, metric, refs) in [
            (SolverKind::Gmres, Metric::Iters, gm),
            (SolverKind::Bicgstab, Metric::Iters, bi),
            (SolverKind::Direct, Metric::Err2, err),
        ] {
            b.next_group();
            for (li, j) in [4usize, 5].into_iter().enumerate() {
                let c = RunConfig { level: j, steps: 1 << (2 * j), solver, ..ex42("II-PI", alpha, gamma, 0.0, 3, 2) };
                b.push(c, metric, Some(refs[li]));
            }
        }
    }
}

fn t5(b: &mut Builder) {
    #[rustfmt::skip]
    let blocks = [
        (0.3, [[88.0, 166.3, 334.9], [35.0, 38.0, 40.0], [44.4, 95.7, 203.8], [21.0, 23.0, 24.0]], [5.8984e-6, 2.8107e-6, 1.4183e-6]),
        (0.8, [[58.1, 94.2, 155.7], [32.0, 35.0, 35.0], [35.0, 65.5, 136.4], [18.5, 20.9, 20.9]], [2.4580e-5, 1.2492e-5, 6.3009e-6]),
    ];
    let krylov = [(SolverKind::Gmres, false), (SolverKind::Gmres, true), (SolverKind::Bicgstab, false), (SolverKind::Bicgstab, true)];
    for (gamma, iters, err) in blocks {
        for (k, (solver, precond)) in krylov.into_iter().enumerate() {
            b.next_group();
            for (li, j) in [5usize, 6, 7].into_iter().enumerate() {
                let c = RunConfig { level: j, steps: 1 << j, solver, precond, ..ex42("II-FBDF", 1.5, gamma, 2.0, 2, 1) };
                b.push(c, Metric::Iters, Some(iters[k][li]));
            }
        }
        // dense baseline only where it fits in memory
        b.next_group();
        for (li, j) in [5usize, 6].into_iter().enumerate() {
            let c = RunConfig { level: j, steps: 1 << j, ..ex42("II-FBDF", 1.5, gamma, 2.0, 2, 1) };
            b.push(c, Metric::Err2, Some(err[li]));
        }
    }
}

fn ex43(scheme_: &str, alpha: f64, gamma: f64, p: C64, d: usize) -> RunConfig {
    RunConfig { case: "ex43".into(), scheme: scheme(scheme_), alpha, gamma, p, sigma: 2.0, d, ..RunConfig::default() }
}

fn t6(b: &mut Builder) {
    #[rustfmt::skip]
    let blocks = [
        (2.0, 8, [
            (0.5, [9.9484e-5, 4.9881e-5, 3.3285e-5], [1.8120e-5, 6.4990e-6, 3.5599e-6]),
            (0.8, [1.9401e-4, 9.7205e-5, 6.4847e-5], [9.4674e-5, 4.1306e-5, 2.5415e-5]),
        ]),
        (1.6, 6, [
            (0.5, [2.9375e-4, 1.4734e-4, 9.8339e-5], [5.4765e-5, 1.9697e-5, 1.0819e-5]),
            (0.8, [5.8284e-4, 2.9237e-4, 1.9514e-4], [2.9075e-4, 1.2705e-4, 7.8226e-5]),
        ]),
    ];
    for (alpha, j, rows) in blocks {
        for (gamma, fbdf, pi) in rows {
            for (s, refs) in [("II-FBDF", fbdf), ("II-PI", pi)] {
                b.next_group();
                for (ni, n) in [20, 40, 60].into_iter().enumerate() {
                    let c = RunConfig { level: j, steps: n, ..ex43(s, alpha, gamma, C64::new(1.0, 1.0), 3) };
                    b.push(c, Metric::Err2, Some(refs[ni]));
                }
            }
        }
    }
}

fn t7(b: &mut Builder) {
    #[rustfmt::skip]
    let rows = [
        (C64::new(1.0, 1.0), 2.0, [1.8039e-2, 4.7323e-3, 1.1970e-3]),
        (C64::new(0.0, 10.0), 2.0, [1.7092e-2, 4.4882e-3, 1.1354e-3]),
        (C64::new(0.0, 0.0), 1.3, [2.0181e-3, 3.2128e-4, 4.9939e-5]),
        (C64::new(1.0, 1.0), 1.6, [5.1635e-3, 1.0086e-3, 1.8940e-4]),
    ];
    for (p, alpha, refs) in rows {
        b.next_group();
        for (li, j) in [3usize, 4, 5].into_iter().enumerate() {
            let c = RunConfig { case: "ex43_colloc".into(), level: j, steps: 4096, ..ex43("COLLOC-PI", alpha, 0.5, p, 4) };
            b.push(c, Metric::MaxErr, Some(refs[li]));
        }
    }
}

fn ex44(scheme_: &str, alpha: f64, gamma: f64, p: C64, d: usize) -> RunConfig {
    RunConfig { case: "ex44".into(), scheme: scheme(scheme_), alpha, gamma, p, sigma: 2.0, d, ..RunConfig::default() }
}

fn t8(b: &mut Builder) {
    // time study; references are at J = 9, J = 7 keeps the per-lag cache small
    #[rustfmt::skip]
    let time = [
        (0.2, [3.5841e-4, 2.8670e-4, 2.3890e-4], [1.3009e-4, 9.9597e-5, 8.0061e-5]),
        (0.6, [1.9803e-4, 1.5842e-4, 1.3202e-4], [9.9421e-6, 6.9837e-6, 5.2316e-6]),
    ];
    for (gamma, fbdf, pi) in time {
        for (s, refs) in [("FWD-FBDF", fbdf), ("FWD-PI", pi)] {
            b.next_group();
            for (ni, n) in [120, 150, 180].into_iter().enumerate() {
                let c = RunConfig { level: 7, steps: n, ..ex44(s, 2.0, gamma, C64::new(1.0, 1.0), 3) };
                b.push(c, Metric::Err2, Some(refs[ni]));
            }
        }
    }
    #[rustfmt::skip]
    let space = [
        (1.2, C64::new(1.0, 1.0), [1.1063e-2, 2.5275e-3, 5.9327e-4]),
        (1.6, C64::new(10.0, 5.0), [1.8155e-2, 4.3328e-3, 1.0042e-3]),
        (1.8, C64::new(5.0, 0.0), [1.2438e-2, 2.9620e-3, 6.9960e-4]),
        (2.0, C64::new(0.0, 1.0), [2.6211e-2, 6.5621e-3, 1.6411e-3]),
    ];
    for (alpha, p, refs) in space {
        b.next_group();
        for (li, j) in [3usize, 4, 5].into_iter().enumerate() {
            let c = RunConfig { level: j, steps: 1 << (2 * j), ..ex44("FWD-FBDF", alpha, 0.5, p, 2) };
            b.push(c, Metric::Err2, Some(refs[li]));
        }
    }
}

fn fig1(b: &mut Builder) {
    for alpha in [1.2, 1.6, 2.0] {
        b.next_group();
        for j in 3usize..=6 {
            let c = RunConfig { level: j, steps: 1 << (2 * j), ..ex43("II-FBDF", alpha, 0.5, C64::new(1.0, 1.0), 2) };
            b.push(c, Metric::Err1, None);
        }
    }
}

/// Runs making up table `id`; `scale` multiplies every step count.
pub fn preset(id: &str, scale: f64) -> Result<Vec<Preset>, CliError> {
    if !(scale > 0.0 && scale <= 1.0) {
        return Err(CliError::Invalid(format!("scale = {scale} violates 0 < scale <= 1")));
    }
    let mut b = Builder { scale, group: 0, out: Vec::new() };
    match id {
        "t1" => t1(&mut b),
        "t2" => t2(&mut b),
        "t3" => t3(&mut b),
        "t4" => t4(&mut b),
        "t5" => t5(&mut b),
        "t6" => t6(&mut b),
        "t7" => t7(&mut b),
        "t8" => t8(&mut b),
        "fig1" => fig1(&mut b),
        _ => return Err(CliError::Invalid(format!("unknown table '{id}'; valid ids: {}", TABLE_IDS.join(", ")))),
    }
    Ok(b.out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_is_well_formed() {
        for id in TABLE_IDS {
            let runs = preset(id, 1.0).unwrap();
            assert!(runs.len() >= 6, "{id}");
            for r in &runs {
                r.config.problem().unwrap();
                r.config.discretization().unwrap();
            }
        }
        assert_eq!(preset("t1", 1.0).unwrap().len(), 24);
        assert!(preset("t9", 1.0).is_err());
    }

    #[test]
    fn scaling_drops_references() {
        let runs = preset("t1", 0.5).unwrap();
        assert_eq!(runs[0].config.steps, 20);
        assert!(runs.iter().all(|r| r.reference.is_none()));
        assert!(preset("t1", 0.0).is_err());
    }
}
