use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use rbeam_core::dynamics::BeamState;
use rbeam_core::functionals::{energy, rho};
use rbeam_core::linalg::SymBandMatrix;
use rbeam_core::mesh::{project_initial, BeamMesh, InitialCondition};

fn dense(m: &SymBandMatrix<f64>) -> DMatrix<f64> {
    let n = m.dim();
    DMatrix::from_fn(n, n, |i, j| m.get(i, j))
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

/// Composite Simpson on [0, 1] with `2n` panels.
fn simpson(f: impl Fn(f64) -> f64, n: usize) -> f64 {
    let m = 2 * n;
    let h = 1.0 / m as f64;
    let mut s = f(0.0) + f(1.0);
    for i in 1..m {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(i as f64 * h);
    }
    s * h / 3.0
}

fn sine_energy_oracle() -> f64 {
    // ι = x − sin x, ς = 1 − cos x
    let wt2 = simpson(|x| (1.0 - x.cos()).powi(2), 20_000);
    let wxt2 = simpson(|x| x.sin().powi(2), 20_000);
    let wxx2 = simpson(|x| x.sin().powi(2), 20_000);
    0.5 * (wt2 + wxt2 + wxx2)
}

fn sine_state(n: usize) -> (BeamMesh<f64>, BeamState<f64>) {
    let mesh = BeamMesh::new(n, 4).unwrap();
    let (w, v) = project_initial(&mesh, &InitialCondition::sine_profile());
    let state = BeamState {
        t: 0.0,
        w,
        v,
        a: vec![0.0; mesh.dim()],
    };
    (mesh, state)
}

#[test]
fn assembled_matrices_are_symmetric() {
    let mesh = BeamMesh::<f64>::new(7, 4).unwrap();
    for m in [&mesh.m0, &mesh.a, &mesh.k] {
        let d = dense(m);
        assert_eq!(d, d.transpose());
    }
}

#[test]
fn matrices_positive_definite_across_refinement() {
    for n in [2, 3, 4, 5, 8, 13, 16, 32, 64] {
        let mesh = BeamMesh::<f64>::new(n, 4).unwrap();
        let mass = dense(&mesh.m0) + dense(&mesh.a);
        assert!(min_eigenvalue(&mass) > 0.0, "M0 + A not PD at n = {n}");
        assert!(min_eigenvalue(&dense(&mesh.k)) > 0.0, "K not PD at n = {n}");
        assert!(min_eigenvalue(&dense(&mesh.m0)) > 0.0, "M0 not PD at n = {n}");
    }
}

#[test]
fn cholesky_agrees_with_dense_solve() {
    let mesh = BeamMesh::<f64>::new(12, 4).unwrap();
    let sys = mesh.m0.combine(1.0, &mesh.a, 1.0).combine(1.0, &mesh.k, 1e-3);
    let b: Vec<f64> = (0..mesh.dim()).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
    let x = sys.cholesky().unwrap().solve(&b).unwrap();
    let xd = dense(&sys)
        .cholesky()
        .unwrap()
        .solve(&nalgebra::DVector::from_vec(b));
    for (a, b) in x.iter().zip(xd.iter()) {
        assert!((a - b).abs() < 1e-9 * b.abs().max(1.0));
    }
}

#[test]
fn cubic_polynomials_integrated_exactly() {
    // w = x², u = x³ are clamped and lie in the Hermite space
    let mesh = BeamMesh::<f64>::new(5, 4).unwrap();
    let w = mesh.interpolate(|x| x * x, |x| 2.0 * x);
    let u = mesh.interpolate(|x| x * x * x, |x| 3.0 * x * x);
    // K entries scale like 1/h³, so exact sums carry a few hundred ulps
    let tol = 1e-11;
    assert!((mesh.m0.bilinear(&w, &u).unwrap() - 1.0 / 6.0).abs() < tol);
    assert!((mesh.a.bilinear(&w, &u).unwrap() - 6.0 / 4.0).abs() < tol);
    assert!((mesh.k.bilinear(&w, &u).unwrap() - 6.0).abs() < tol);
    assert!((mesh.m0.quad_form(&u).unwrap() - 1.0 / 7.0).abs() < tol);
    assert!((mesh.a.quad_form(&u).unwrap() - 9.0 / 5.0).abs() < tol);
    assert!((mesh.k.quad_form(&u).unwrap() - 12.0).abs() < tol);
}

#[test]
fn boundary_selections_read_tip_traces() {
    let mesh = BeamMesh::<f64>::new(6, 4).unwrap();
    let w = mesh.interpolate(|x| x * x * x, |x| 3.0 * x * x);
    assert_eq!(mesh.sel_w1.dot(&w), 1.0);
    assert_eq!(mesh.sel_wx1.dot(&w), 3.0);
}

#[test]
fn initial_energy_matches_quadrature_oracle() {
    let oracle = sine_energy_oracle();
    assert!((oracle - 0.294867).abs() < 1e-6);
    let errs: Vec<f64> = [16, 32, 64]
        .iter()
        .map(|&n| {
            let (mesh, s) = sine_state(n);
            (energy(&mesh, &s).unwrap() - oracle).abs()
        })
        .collect();
    assert!(errs[2] < 1e-6);
    let order = (errs[0] / errs[1]).log2();
    assert!(order >= 2.0, "observed order {order}");
}

#[test]
fn rho_matches_quadrature_oracle() {
    let alpha = 0.75;
    let oracle = simpson(
        |x| {
            let (w, wx, wxx) = (x - x.sin(), 1.0 - x.cos(), x.sin());
            let (wt, wxt) = (1.0 - x.cos(), x.sin());
            wt * (x * wx - alpha * w) + wxt * ((1.0 - alpha) * wx + x * wxx)
        },
        20_000,
    );
    let (mesh, s) = sine_state(64);
    let r = rho(&mesh, &s, alpha).unwrap();
    assert!((r - oracle).abs() < 1e-8, "{r} vs {oracle}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn poincare_inequalities_hold(
        dofs in proptest::collection::vec(-1.0f64..1.0, 16)
    ) {
        // clamped at 0: ∫w² ≤ (4/π²)∫w_x², ∫w_x² ≤ (4/π²)∫w_xx²
        let mesh = BeamMesh::<f64>::new(8, 4).unwrap();
        let c = 4.0 / std::f64::consts::PI.powi(2);
        let m = mesh.m0.quad_form(&dofs).unwrap();
        let a = mesh.a.quad_form(&dofs).unwrap();
        let k = mesh.k.quad_form(&dofs).unwrap();
        prop_assert!(m <= c * a * (1.0 + 1e-12));
        prop_assert!(a <= c * k * (1.0 + 1e-12));
    }

    #[test]
    fn energy_nonnegative_and_rho_bounded(
        w in proptest::collection::vec(-1.0f64..1.0, 12),
        v in proptest::collection::vec(-1.0f64..1.0, 12),
        alpha in 0.51f64..0.99,
    ) {
        let mesh = BeamMesh::<f64>::new(6, 4).unwrap();
        let s = BeamState { t: 0.0, w, v, a: vec![0.0; 12] };
        let e = energy(&mesh, &s).unwrap();
        prop_assert!(e >= 0.0);
        prop_assert!(rho(&mesh, &s, alpha).unwrap().abs() <= 3.0 * e + 1e-10);
    }
}
