use feynkac::bspline::{SplineSpace, Variant};
use feynkac::fracassembly::*;
use feynkac::quadrature::gauss_legendre;
use feynkac::C64;

mod props;

#[test]
fn stiffness_matches_reference_entries() {
    // values from nested adaptive quadrature at 20 digits
    let hat = SplineSpace::new(2, 3, 1).unwrap();
    let (s, _) = stiffness_1d(&hat, 1.5).unwrap();
    for (i, j, want) in [
        (0, 0, 19.941971392435955),
        (2, 5, 0.0),
        (5, 2, -0.7412185823377804),
        (3, 3, 19.941971392435955),
        (6, 0, -0.11321838697900135),
    ] {
        assert!((s.entry(i, j) - want).abs() < 1e-10, "hat ({i},{j}) {}", s.entry(i, j));
    }
    let quad = SplineSpace::new(3, 3, 1).unwrap();
    let (s, _) = stiffness_1d(&quad, 1.4).unwrap();
    for (i, j, want) in [
        (0, 0, 7.587974545979317),
        (0, 1, -7.0401850280159393),
        (1, 0, 6.9237192725162801),
        (3, 5, -1.373498321254521),
        (7, 7, 7.587974545979317),
        (7, 0, -0.035365301012249053),
        (0, 7, 0.0),
        (6, 2, -0.2868016539341612),
    ] {
        assert!((s.entry(i, j) - want).abs() < 1e-10, "quadratic ({i},{j}) {}", s.entry(i, j));
    }
}

#[test]
fn boundary_frac_derivative_reference() {
    let v = frac_deriv_basis(3, Variant::LeftBoundary0, 1.4, 0.7).unwrap();
    assert!((v - 0.62119722796312545).abs() < 1e-12, "{v}");
}

#[test]
fn quasi_toeplitz_equals_brute_force() {
    props::quasi_toeplitz_matches_brute_force().unwrap();
}

#[test]
fn toeplitz_shift_invariance() {
    let space = SplineSpace::new(2, 5, 1).unwrap();
    let (s, _) = stiffness_1d(&space, 1.5).unwrap();
    assert_eq!(s.entry(3, 5), s.entry(7, 9));
    assert_eq!(s.entry(9, 2), s.entry(20, 13));
}

#[test]
fn riesz_form_is_coercive() {
    for alpha in [1.2, 1.5, 1.8] {
        for d in [2, 3] {
            let space = SplineSpace::new(d, 4, 1).unwrap();
            let (s, _) = stiffness_1d(&space, alpha).unwrap();
            let r = riesz_matrix(&s, alpha, 1.0);
            let eig = nalgebra::SymmetricEigen::new(r);
            assert!(eig.eigenvalues.min() > 0.0, "alpha={alpha} d={d}");
        }
    }
}

#[test]
fn fourth_order_unsupported_for_galerkin() {
    let space = SplineSpace::new(4, 3, 2).unwrap();
    assert_eq!(stiffness_1d(&space, 1.5).unwrap_err(), AssemblyError::GalerkinOrder(4));
}

#[test]
fn pairing_reproduces_symmetric_stiffness() {
    for (d, alpha) in [(2, 1.5), (3, 1.3), (3, 2.0), (2, 1.9)] {
        let space = SplineSpace::new(d, 4, 1).unwrap();
        let (s, _) = stiffness_1d(&space, alpha).unwrap();
        let sd = s.to_dense();
        let sym = &sd + sd.transpose();
        let r = stiffness_weighted(&space, alpha, |_| C64::new(1.0, 0.0), |_| C64::new(0.0, 0.0)).unwrap();
        let err = (r.map(|z| z.re) - &sym).amax();
        assert!(err < 1e-11 * sym.amax(), "d={d} alpha={alpha}: {err}");
    }
}

#[test]
fn weighted_stiffness_tends_to_unweighted() {
    let space = SplineSpace::new(2, 4, 1).unwrap();
    let base = stiffness_weighted(&space, 1.5, |_| C64::new(1.0, 0.0), |_| C64::new(0.0, 0.0)).unwrap();
    let diff = |tau: f64| {
        let w = stiffness_weighted(&space, 1.5, |x| C64::new((-x * tau).exp(), 0.0), |x| C64::new(-tau * (-x * tau).exp(), 0.0))
            .unwrap();
        (w - &base).map(|z| z.norm()).amax()
    };
    let (d1, d2) = (diff(1e-2), diff(5e-3));
    assert!((d1 / d2 - 2.0).abs() < 0.05, "{d1} {d2}");
}

#[test]
fn mass_matrices() {
    let space = SplineSpace::new(3, 4, 1).unwrap();
    let m = mass_1d(&space).to_dense();
    // Σ_j M_ij = (φ_i, Σ_j φ_j) and the hat-free sum of d=3 bases is not 1; compare with quadrature
    let nb = NodeBasis::legendre(&space, 6);
    let ones = vec![1.0; space.dim()];
    let sum_vals: Vec<f64> = nb.eval(&ones);
    let proj = nb.project(&sum_vals);
    for i in 0..space.dim() {
        assert!((m.row(i).sum() - proj[i]).abs() < 1e-13);
    }
    assert_eq!(m, m.transpose());
    // exponential weight against closed-form hat integrals
    let hat = SplineSpace::new(2, 3, 1).unwrap();
    let wm = weighted_mass(&hat, |x| C64::new((-x).exp(), 0.0));
    let h: f64 = 0.125;
    // ∫ e^{-x} φ_1 φ_2: product of overlapping hats on [2h, 3h]
    let a = 2.0 * h;
    let exact = {
        // product of the two normalized hats on [a, a+h]
        let f = |x: f64| (-x).exp() * (x - a) * (a + h - x) / (h * h * h);
        let (x, w) = gauss_legendre(20).unit_interval();
        x.iter().zip(&w).map(|(s, wq)| wq * h * f(a + s * h)).sum::<f64>()
    };
    assert!((wm[(1, 2)].re - exact).abs() < 1e-12, "{} {exact}", wm[(1, 2)].re);
}

#[test]
fn load_vectors() {
    let space = SplineSpace::new(2, 4, 1).unwrap();
    let nb = NodeBasis::legendre(&space, 4);
    let f = nb.load(|_| 1.0);
    for v in &f {
        assert!((v - 0.25).abs() < 1e-14);
    }
    // x^{-1/2} against the first hat: ∫_0^{2h} x^{-1/2} φ_0 = √h^{-1}... closed form
    let cache = MomentCache::new(&space);
    let mut out = vec![0.0; space.dim()];
    cache.add_to(1.0, -0.5, Side::Left, &mut out);
    let h: f64 = 1.0 / 16.0;
    // φ_0 = h^{-1/2} (x/h) on [0,h], h^{-1/2}(2 - x/h) on [h,2h]
    let part1 = (2.0 / 3.0) * h.powf(1.5) / h;
    let part2 = 2.0 * 2.0 * ((2.0 * h).sqrt() - h.sqrt()) - (2.0 / 3.0) * ((2.0 * h).powf(1.5) - h.powf(1.5)) / h;
    let want = (part1 + part2) / h.sqrt();
    assert!((out[0] - want).abs() < 1e-13, "{} {want}", out[0]);
    let mut right = vec![0.0; space.dim()];
    cache.add_to(1.0, -0.5, Side::Right, &mut right);
    assert!((right[space.dim() - 1] - want).abs() < 1e-13);
    // sin(πx) against a 64-point per-cell rule
    let fine = NodeBasis::legendre(&space, 64).load(|x| (std::f64::consts::PI * x).sin());
    let coarse = NodeBasis::legendre(&space, 8).load(|x| (std::f64::consts::PI * x).sin());
    for (a, b) in fine.iter().zip(&coarse) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn collocation_matrices() {
    let space = SplineSpace::new(4, 3, 2).unwrap();
    let (al, ar, e) = colloc_matrices(&space, 2.0).unwrap();
    let pts = colloc_points(3);
    let h = 8.0;
    for (i, x) in pts.iter().enumerate() {
        for k in 0..space.dim() {
            // second derivative from the shape polynomial
            let f = space.funcs[k];
            let y = h * x - f.shift as f64;
            let want = h.powf(2.5) * space.shape(f.variant).second_deriv(y);
            assert!((al[(i, k)] - want).abs() < 1e-9 * h.powi(3), "({i},{k}) {} {want}", al[(i, k)]);
            assert!((e[(i, k)] - space.eval(k, *x)).abs() < 1e-15);
        }
    }
    assert_eq!(ar[(0, 0)], al[(pts.len() - 1, space.dim() - 1)]);
    // interior Toeplitz: entry depends on point index minus function shift
    let space = SplineSpace::new(4, 5, 2).unwrap();
    let (al, _, _) = colloc_matrices(&space, 1.3).unwrap();
    assert_eq!(al[(10, 6)], al[(14, 10)]);
}
