use feynkac::bspline::{Fwt, SplineSpace};
use feynkac::fracassembly::{mass_1d, stiffness_1d};
use feynkac::linalg::*;
use feynkac::C64;
use nalgebra::{DMatrix, DVector};

fn lcg(seed: &mut u64) -> f64 {
    *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    ((*seed >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
}

fn random(n: usize, m: usize, seed: u64) -> DMatrix<f64> {
    let mut s = seed;
    DMatrix::from_fn(n, m, |_, _| lcg(&mut s))
}

#[test]
fn gmres_solves_spd() {
    let a = random(40, 40, 3);
    let spd = &a * a.transpose() + DMatrix::identity(40, 40) * 2.0;
    let b: Vec<f64> = random(40, 1, 9).as_slice().to_vec();
    let r = gmres_restarted(&DenseOp(spd.clone()), &b, &vec![0.0; 40], 30, 1e-12, 2000);
    assert!(r.converged);
    let x = spd.lu().solve(&DVector::from_vec(b)).unwrap();
    for (p, q) in r.x.iter().zip(x.iter()) {
        assert!((p - q).abs() < 1e-9);
    }
}

#[test]
fn bicgstab_nonsymmetric_complex() {
    let n = 30;
    let a = random(n, n, 5) * 0.3 + DMatrix::identity(n, n) * 3.0;
    let ac = a.map(|v| C64::new(v, 0.0)) + DMatrix::identity(n, n) * C64::new(0.0, 1.0);
    let b: Vec<C64> = (0..n).map(|i| C64::new(i as f64, 1.0)).collect();
    let r = bicgstab(&MatOp(ac.clone()), &b, &vec![C64::new(0.0, 0.0); n], 1e-12, 500);
    assert!(r.converged);
    let x = ac.lu().solve(&DVector::from_vec(b)).unwrap();
    for (p, q) in r.x.iter().zip(x.iter()) {
        assert!((p - q).norm() < 1e-8);
    }
}

#[test]
fn sylvester_matches_kronecker() {
    let space = SplineSpace::new(2, 3, 1).unwrap();
    let mass = mass_1d(&space);
    let (s, _) = stiffness_1d(&space, 1.5).unwrap();
    let (md, sd) = (mass.to_dense(), s.to_dense());
    let q0 = 2.5;
    let op = SylvesterOp { q0, mass: &mass, stiff: &s };
    let full = md.kronecker(&md) * q0 + md.kronecker(&sd) + sd.kronecker(&md);
    let x = random(space.dim(), space.dim(), 11);
    let mut y = vec![0.0; x.len()];
    op.apply(x.as_slice(), &mut y);
    let want = &full * DVector::from_column_slice(x.as_slice());
    for (p, q) in y.iter().zip(want.iter()) {
        assert!((p - q).abs() < 1e-11);
    }
    let k = kron2_apply(&DenseOp(sd.clone()), &DenseOp(md.clone()), x.as_slice()).unwrap();
    let want = md.kronecker(&sd) * DVector::from_column_slice(x.as_slice());
    for (p, q) in k.iter().zip(want.iter()) {
        assert!((p - q).abs() < 1e-11);
    }
}

#[test]
fn wavelet_preconditioner_same_solution_fewer_iterations() {
    let (j0, j) = (2, 6);
    let space = SplineSpace::new(2, j, j0).unwrap();
    let mass = mass_1d(&space);
    let (s, _) = stiffness_1d(&space, 1.6).unwrap();
    let op = SylvesterOp { q0: 1.0, mass: &mass, stiff: &s };
    let n = space.dim();
    let b: Vec<C64> = random(n, n, 21).iter().map(|v| C64::new(*v, 0.5 * v)).collect();
    let zero = vec![C64::new(0.0, 0.0); n * n];
    let plain = gmres_restarted(&op, &b, &zero, 30, 1e-10, 5000);
    assert!(plain.converged);

    let pre = WaveletPrecond::new(Fwt::new(2, j0, j).unwrap(), &mass, &s).unwrap();
    let d = pre.scaling(1.0).unwrap();
    let pop = PrecondOp { op: &op, pre: &pre, d: d.clone() };
    let rhs = pre.to_multi(&d, &DMatrix::from_column_slice(n, n, &b));
    let sol = gmres_restarted(&pop, rhs.as_slice(), &zero, 30, 1e-10, 5000);
    assert!(sol.converged);
    assert!(sol.iters < plain.iters, "{} vs {}", sol.iters, plain.iters);
    let x = pre.to_single(&d, &DMatrix::from_column_slice(n, n, &sol.x));
    let scale = plain.x.iter().map(|v| v.norm()).fold(0.0, f64::max);
    for (p, q) in x.iter().zip(&plain.x) {
        assert!((p - q).norm() < 1e-7 * scale);
    }
}

#[test]
fn preconditioner_levels_share_scaling() {
    let space = SplineSpace::new(2, 6, 2).unwrap();
    let mass = mass_1d(&space);
    let (s, _) = stiffness_1d(&space, 1.5).unwrap();
    let fwt = Fwt::new(2, 2, 6).unwrap();
    let levels = fwt.levels();
    let pre = WaveletPrecond::new(fwt, &mass, &s).unwrap();
    // interior wavelets on one level are translates, so their diagonals agree
    let start = levels.iter().position(|l| *l == Some(5)).unwrap();
    let count = 1 << 5;
    let inner = &pre.stiff_diag[start + 3..start + count - 3];
    for v in inner {
        assert!((v - inner[0]).abs() < 1e-10 * inner[0].abs());
    }
    assert!(pre.mass_diag.iter().all(|v| *v > 0.0));
    assert!(matches!(pre.scaling(-1e6), Err(LinalgError::NotCoercive { .. })));
}
