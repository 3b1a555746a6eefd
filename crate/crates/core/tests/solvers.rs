use std::f64::consts::PI;

use vortexlab_core::error::Error;
use vortexlab_core::fields::{random_state, BundleSpec, RandomSpec};
use vortexlab_core::functional::derive_parameters;
use vortexlab_core::geometry::TorusGeometry;
use vortexlab_core::solvers::{embed_vortex_as_coupled, gradient_flow, solve_abelian_vortex, solve_second_connection, FlowStatus, SolveOptions, ZeroData};

fn torus(n: usize) -> TorusGeometry<f64> {
    TorusGeometry::build(&[1.0], &[n], 1.0).unwrap()
}

#[test]
fn degree_one_vortex_saturates_the_bound() {
    let geom = torus(64);
    let tau = 1.2 * 4.0 * PI;
    let sol = solve_abelian_vortex(&BundleSpec::new(1, 1), ZeroData::Auto, tau, &geom, &SolveOptions::default()).unwrap();
    assert!(sol.residuals.max() <= 1e-10, "{:?}", sol.residuals);
    let e = sol.certificate.energy.total;
    assert!((e - 2.0 * PI * tau).abs() <= 1e-5 * 2.0 * PI * tau, "{e}");
    assert!(sol.certificate.passed);
}

#[test]
fn degree_zero_vortex_is_the_constant_section() {
    let geom = torus(16);
    let sol = solve_abelian_vortex(&BundleSpec::new(1, 0), ZeroData::Auto, 3.0, &geom, &SolveOptions::default()).unwrap();
    assert!(sol.certificate.energy.total.abs() < 1e-12);
    for p in 0..geom.npts() {
        assert!((sol.state.phi.scalar_at(p).norm_sqr() - 3.0).abs() < 1e-10);
    }
}

#[test]
fn threshold_is_enforced_and_forced_solves_fail() {
    let geom = torus(32);
    let e = BundleSpec::new(1, 1);
    let tau = 0.9 * 4.0 * PI;
    let r = solve_abelian_vortex(&e, ZeroData::Auto, tau, &geom, &SolveOptions::default());
    assert!(matches!(r, Err(Error::ThresholdViolated { .. })));
    let opts = SolveOptions { force: true, ..SolveOptions::default() };
    let r = solve_abelian_vortex(&e, ZeroData::Auto, tau, &geom, &opts);
    assert!(matches!(r, Err(Error::Diverged { .. }) | Err(Error::SingularLinearization(_))), "{r:?}");
}

#[test]
fn solves_are_bitwise_reproducible() {
    let geom = torus(32);
    let e = BundleSpec::new(1, 2);
    let a = solve_abelian_vortex(&e, ZeroData::Auto, 40.0, &geom, &SolveOptions::default()).unwrap();
    let b = solve_abelian_vortex(&e, ZeroData::Auto, 40.0, &geom, &SolveOptions::default()).unwrap();
    assert_eq!(a.state.phi.data, b.state.phi.data);
    assert_eq!(a.certificate, b.certificate);
}

#[test]
fn single_precision_solve() {
    let geom = TorusGeometry::<f32>::build(&[1.0], &[32], 1.0).unwrap();
    let tau = 1.5 * 4.0 * PI;
    let opts = SolveOptions { residual_tol: 5e-2, cg_tol: 1e-6, ..SolveOptions::default() };
    let sol = solve_abelian_vortex(&BundleSpec::new(1, 1), ZeroData::Auto, tau, &geom, &opts).unwrap();
    let e = sol.certificate.energy.total;
    assert!((e - 2.0 * PI * tau).abs() <= 1e-3 * 2.0 * PI * tau, "{e}");
}

#[test]
fn embedding_gives_a_coupled_vortex() {
    let geom = torus(64);
    let vortex = solve_abelian_vortex(&BundleSpec::new(1, 1), ZeroData::Auto, 1.1 * 4.0 * PI, &geom, &SolveOptions::default()).unwrap();
    let coupled = embed_vortex_as_coupled(&vortex, &geom, &SolveOptions::default()).unwrap();
    let r = &coupled.residuals;
    assert!(r.max() <= 1e-8, "{r:?}");
    let p = &coupled.params;
    assert!((p.tau + p.tau_prime - 4.0 * PI).abs() < 1e-12);
    assert!(p.sigma_identity_gap().unwrap() < 1e-12);
    assert!(coupled.certificate.passed, "{:?}", coupled.certificate);
}

#[test]
fn second_connection_needs_consistent_data() {
    let geom = torus(32);
    let vortex = solve_abelian_vortex(&BundleSpec::new(1, 1), ZeroData::Auto, 15.0, &geom, &SolveOptions::default()).unwrap();
    let phi = vortex.state.phi.scale_re(std::f64::consts::FRAC_1_SQRT_2);
    let consistent = (4.0 * PI - 15.0) / 2.0;
    assert!(solve_second_connection(&phi, consistent, &geom, &SolveOptions::default()).is_ok());
    let r = solve_second_connection(&phi, consistent + 0.5, &geom, &SolveOptions::default());
    assert!(matches!(r, Err(Error::IncompatibleTopology(_))), "{r:?}");
}

#[test]
fn flow_matches_the_abelian_solver() {
    let geom = torus(16);
    let e = BundleSpec::new(1, 1);
    let tau = 1.3 * 4.0 * PI;
    let exact = solve_abelian_vortex(&e, ZeroData::Auto, tau, &geom, &SolveOptions::default()).unwrap();
    let st = random_state(&geom, &RandomSpec::vortex(e, 4.0), 3).unwrap();
    let opts = SolveOptions { max_iters: 3000, residual_tol: 1e-6, ..SolveOptions::default() };
    let flow = gradient_flow(&geom, st, &exact.params, &opts).unwrap();
    assert_eq!(flow.status, FlowStatus::Converged, "{} {}", flow.gradient_norm, flow.solution.certificate.energy.defect);
    let (ef, ee) = (flow.solution.certificate.energy.total, exact.certificate.energy.total);
    assert!((ef - ee).abs() < 1e-6 * ee, "{ef} vs {ee}");
    assert!(flow.energy_trace.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn flow_reaches_the_bound_for_a_rank_two_triple() {
    let geom = torus(16);
    let (e1, e2) = (BundleSpec::new(2, 1), BundleSpec::trivial());
    let params = derive_parameters(&e1, &e2, 3.0 * PI, &geom).unwrap();
    let st = random_state(&geom, &RandomSpec::coupled(e1, e2, 4.0), 0).unwrap();
    let opts = SolveOptions { max_iters: 3000, residual_tol: 1e-5, ..SolveOptions::default() };
    let flow = gradient_flow(&geom, st, &params, &opts).unwrap();
    let c = &flow.solution.certificate;
    assert_eq!(flow.status, FlowStatus::Converged, "{} {c:?}", flow.gradient_norm);
    assert!(c.passed, "{c:?}");
    let u = flow.solution.state.a1.unitarity_defect();
    assert!(u < 1e-10, "{u}");
}
