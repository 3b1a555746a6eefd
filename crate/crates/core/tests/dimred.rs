use std::f64::consts::PI;

use num_complex::Complex;
use vortexlab_core::dimred::{assemble_reduced_curvature, hym_equivalence_check, verify_density_identity, verify_integral_identity};
use vortexlab_core::fields::{random_state, BundleSpec, FieldState, RandomSpec, StateKind};
use vortexlab_core::functional::{derive_parameters, ymh_density};
use vortexlab_core::geometry::TorusGeometry;
use vortexlab_core::grid::Field;
use vortexlab_core::linalg::SmallMat;
use vortexlab_core::solvers::{embed_vortex_as_coupled, solve_abelian_vortex, SolveOptions, ZeroData};

#[test]
fn density_identity_on_random_triples() {
    let cases: [(&[f64], &[usize], f64, BundleSpec, BundleSpec, f64); 3] = [
        (&[1.0], &[32], 1.0, BundleSpec::new(2, 1), BundleSpec::trivial(), 20.0),
        (&[1.3], &[32], 0.8, BundleSpec::new(1, 1), BundleSpec::new(1, 0), 14.0),
        (&[1.0, 1.0], &[8, 8], 1.0, BundleSpec::new(1, 0), BundleSpec::trivial(), 5.0),
    ];
    for (k, (periods, grid, s, e1, e2, tau)) in cases.into_iter().enumerate() {
        let geom = TorusGeometry::build(periods, grid, s).unwrap();
        let params = derive_parameters(&e1, &e2, tau, &geom).unwrap();
        let st = random_state(&geom, &RandomSpec::coupled(e1, e2, 4.0), 7 + k as u64).unwrap();
        let e = ymh_density(&geom, &st, &params).unwrap();
        let scale = e.iter().fold(params.c_tau.unwrap().abs(), |a, b| a.max(b.abs()));
        let res = verify_density_identity(&geom, &st, &params).unwrap();
        assert!(res <= 1e-10 * scale, "case {k}: {res} vs scale {scale}");
        let gap = verify_integral_identity(&geom, &st, &params).unwrap().gap;
        assert!(gap <= 1e-10, "case {k}: {gap}");
        let red = assemble_reduced_curvature(&geom, &st, &params).unwrap();
        assert!(red.skew_defect() < 1e-12);
    }
}

#[test]
fn zero_field_density_matches_closed_form_constant() {
    let geom = TorusGeometry::build(&[1.0], &[16], 1.0).unwrap();
    let (e1, e2) = (BundleSpec::new(2, 1), BundleSpec::new(1, 0));
    let tau = 18.0;
    let params = derive_parameters(&e1, &e2, tau, &geom).unwrap();
    let st = FieldState::zero(StateKind::Coupled, &e1, &e2, &geom).unwrap();
    let red = assemble_reduced_curvature(&geom, &st, &params).unwrap();
    let e = ymh_density(&geom, &st, &params).unwrap();
    // Fiber block alone: |(-4πi)/σ|² on the E₂ block, curvature blocks carry the rest.
    let sigma = params.sigma.unwrap();
    let (r1, r2, vol) = (2.0, 1.0, 1.0);
    let tp = (4.0 * PI * 1.0 / vol - tau * r1) / r2;
    let c = 16.0 * PI * PI * r2 / (sigma * sigma) - 0.25 * (tau * tau * r1 + tp * tp * r2);
    assert!((params.tau_prime - tp).abs() < 1e-12);
    assert!((params.c_tau.unwrap() - c).abs() < 1e-10 * c.abs().max(1.0));
    for p in 0..geom.npts() {
        assert!((red.norm_sq(p) - e[p] - c).abs() < 1e-10 * c.abs().max(1.0));
    }
}

#[test]
fn embedded_vortex_is_hym() {
    let geom = TorusGeometry::build(&[1.0], &[64], 1.0).unwrap();
    let opts = SolveOptions::default();
    let sol = solve_abelian_vortex(&BundleSpec::new(1, 1), ZeroData::Auto, 1.1 * 4.0 * PI, &geom, &opts).unwrap();
    let coupled = embed_vortex_as_coupled(&sol, &geom, &opts).unwrap();
    let eq = hym_equivalence_check(&geom, &coupled.state, &coupled.params).unwrap();
    assert!(eq.hym_residuals.max() < 1e-8, "{:?}", eq.hym_residuals);
    assert!(eq.constant <= 4.0, "{}", eq.constant);
    assert!(verify_integral_identity(&geom, &coupled.state, &coupled.params).unwrap().gap < 1e-10);
}

#[test]
fn violation_in_second_moment_map_shows_in_second_block() {
    // φ = 0, E₁ of slope τ̂ with its constant-curvature connection, E₂ trivial and flat
    // apart from a perturbation a = (-i∂_y w, i∂_x w), so ΛF₂ = iΔw.
    let geom = TorusGeometry::build(&[1.0], &[32], 1.0).unwrap();
    let (e1, e2) = (BundleSpec::new(1, 1), BundleSpec::trivial());
    let params = derive_parameters(&e1, &e2, 4.0 * PI, &geom).unwrap();
    let mut st = FieldState::zero(StateKind::Coupled, &e1, &e2, &geom).unwrap();
    let eps = 1e-3;
    let k = 2.0 * PI;
    let i = Complex::new(0.0, 1.0);
    let comp = |f: &dyn Fn(f64, f64) -> Complex<f64>| {
        Field::from_fn(geom.npts(), 1, 1, |p| SmallMat::scalar(1, f(geom.coord(p, 0), geom.coord(p, 1))))
    };
    // w = ε cos(kx) cos(ky)
    let ax = comp(&|x, y| -i * (-eps * k * (k * x).cos() * (k * y).sin()));
    let ay = comp(&|x, y| i * (-eps * k * (k * x).sin() * (k * y).cos()));
    st.a2 = st.a2.with_perturbation(vec![ax, ay]).unwrap();
    let delta = eps * 2.0 * k * k;
    let eq = hym_equivalence_check(&geom, &st, &params).unwrap();
    assert!((eq.vortex_residuals.moment2 - delta).abs() < 1e-9, "{:?}", eq.vortex_residuals);
    assert!(eq.vortex_residuals.moment1 < 1e-10 && eq.vortex_residuals.holomorphic < 1e-12);
    assert!(eq.hym_residuals.block2 >= delta / 2.0);
    assert!(eq.hym_residuals.block1 < 1e-10 && eq.hym_residuals.mixed < 1e-12);
}
