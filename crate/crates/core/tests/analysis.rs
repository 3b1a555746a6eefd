use std::f64::consts::PI;

use proptest::prelude::*;
use vortexlab_core::analysis::{
    concentration_detect, energy_identity_audit, euler_lagrange_residual, monotonicity_check, scaled_energy_profile, scaled_mass_field,
    DensityProfile,
};
use vortexlab_core::fields::{random_state, BundleSpec, RandomSpec};
use vortexlab_core::functional::derive_parameters;
use vortexlab_core::geometry::TorusGeometry;
use vortexlab_core::solvers::{embed_vortex_as_coupled, solve_abelian_vortex, SolveOptions, ZeroData};
use vortexlab_core::Error;

/// Gaussian bump of total grid mass `mass` and width `lambda` at `center`.
fn bump(geom: &TorusGeometry<f64>, center: &[f64], lambda: f64, mass: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..geom.npts()).map(|p| (-geom.distance_sq(p, center) / (2.0 * lambda * lambda)).exp()).collect();
    let total = geom.integrate(&raw);
    raw.iter().map(|v| v * mass / total).collect()
}

#[test]
fn constant_density_profile_matches_ball_volume() {
    let geom = TorusGeometry::build(&[1.0, 1.0], &[16, 16], 1.0).unwrap();
    let c = 3.0;
    let density = vec![c; geom.npts()];
    let radii = [0.1, 0.2, 0.3, 0.4];
    let prof = scaled_energy_profile(&geom, &density, &[0.0; 4], &radii).unwrap();
    for ((r, v), s) in radii.iter().zip(&prof.values).zip(&prof.slack) {
        let exact = c * PI * PI / 2.0 * r.powi(4);
        assert!((v - exact).abs() <= *s, "r={r}: {v} vs {exact} slack {s}");
    }
    assert!(monotonicity_check(&prof, true).nondecreasing);
}

#[test]
fn captured_bump_gives_flat_profile_in_four_dimensions() {
    let geom = TorusGeometry::build(&[1.0, 1.0], &[16, 16], 1.0).unwrap();
    let center = [0.5; 4];
    let q = bump(&geom, &center, 0.04, 10.0);
    let prof = scaled_energy_profile(&geom, &q, &center, &[0.25, 0.3, 0.4]).unwrap();
    for v in &prof.values {
        assert!((v - 10.0).abs() < 1e-3, "{v}");
    }
}

#[test]
fn zero_density_profile_vanishes() {
    let geom = TorusGeometry::build(&[1.0], &[32], 1.0).unwrap();
    let prof = scaled_energy_profile(&geom, &vec![0.0; geom.npts()], &[0.5, 0.5], &[0.1, 0.2]).unwrap();
    assert!(prof.values.iter().all(|v| *v == 0.0));
}

#[test]
fn oversized_radius_is_rejected() {
    let geom = TorusGeometry::build(&[1.0], &[32], 1.0).unwrap();
    let err = scaled_energy_profile(&geom, &vec![1.0; geom.npts()], &[0.0, 0.0], &[0.1, 0.6]).unwrap_err();
    assert!(matches!(err, Error::RadiusTooLarge { .. }));
}

#[test]
fn decreasing_profile_is_located() {
    let prof = DensityProfile {
        center: vec![0.0, 0.0],
        radii: vec![0.1, 0.2, 0.3, 0.4],
        values: vec![1.0, 2.0, 1.5, 3.0],
        slack: vec![0.01; 4],
    };
    let v = monotonicity_check(&prof, false);
    assert!(!v.nondecreasing);
    assert_eq!(v.location, Some(2));
    assert!((v.worst_violation - 0.5).abs() < 1e-15);
    assert!(v.hypothesis_unmet);
}

#[test]
fn smooth_stationary_family_is_not_detected() {
    let geom = TorusGeometry::build(&[1.0, 1.0], &[16, 16], 1.0).unwrap();
    let q: Vec<f64> = (0..geom.npts()).map(|p| 2.0 + (2.0 * PI * geom.coord(p, 0)).cos()).collect();
    let family = vec![q.clone(), q.clone(), q];
    let r = 0.2;
    let sup = scaled_mass_field(&geom, &family[0], r).unwrap().into_iter().fold(0.0, f64::max);
    let rep = concentration_detect(&geom, &family, sup * 1.01, &[0.3, r]).unwrap();
    assert!(rep.detected_points.is_empty());
    // Scaled mass of a bounded density is at most sup q · |B_r|.
    assert!(sup <= 3.0 * PI * PI / 2.0 * r.powi(4) * 1.5);
}

#[test]
fn blowup_family_is_detected_at_its_center() {
    let geom = TorusGeometry::build(&[1.0, 1.0], &[16, 16], 1.0).unwrap();
    let x0 = [0.25, 0.5, 0.75, 0.25];
    let mass = 8.0 * PI * PI;
    let family: Vec<Vec<f64>> = [0.06, 0.05, 0.04]
        .iter()
        .map(|&l| bump(&geom, &x0, l, mass).iter().map(|v| v + 1.0).collect())
        .collect();
    let rep = concentration_detect(&geom, &family, mass / 2.0, &[0.3, 0.2]).unwrap();
    assert_eq!(rep.detected_points.len(), 1);
    assert_eq!(rep.detected_points[0], x0.to_vec());
    assert!((rep.theta_estimates[0] - mass).abs() < 0.05 * mass);
}

#[test]
fn energy_audit_arithmetic() {
    let geom = TorusGeometry::build(&[1.0], &[16], 1.0).unwrap();
    let limit = vec![2.0; geom.npts()];
    let e = 8.0 * PI * PI;
    let ok = energy_identity_audit(&geom, &[], &limit, &[e - 2.0], e).unwrap();
    assert!(ok.passed && ok.relative_gap < 1e-12);
    assert_eq!(ok.warnings.len(), 1);
    let bad = energy_identity_audit(&geom, &[], &limit, &[e], e).unwrap();
    assert!(!bad.passed);
    let clean = energy_identity_audit(&geom, &[limit.clone()], &limit, &[], 2.0).unwrap();
    assert!(clean.passed && clean.warnings.is_empty() && clean.family_energies == vec![2.0]);
}

#[test]
fn euler_lagrange_on_curve_converges_at_second_order() {
    let opts = SolveOptions::default();
    let res: Vec<f64> = [16usize, 32]
        .iter()
        .map(|&n| {
            let g = TorusGeometry::build(&[1.0], &[n], 1.0).unwrap();
            let s = solve_abelian_vortex(&BundleSpec::new(1, 1), ZeroData::Auto, 1.1 * 4.0 * PI, &g, &opts).unwrap();
            let c = embed_vortex_as_coupled(&s, &g, &opts).unwrap();
            euler_lagrange_residual(&g, &c.state, &c.params, 1e-8).unwrap().max()
        })
        .collect();
    assert!(res[0] / res[1] >= 3.0, "{res:?}");
}

#[test]
fn euler_lagrange_rejects_non_solutions() {
    let g = TorusGeometry::build(&[1.0], &[16], 1.0).unwrap();
    let (e1, e2) = (BundleSpec::new(1, 1), BundleSpec::trivial());
    let st = random_state(&g, &RandomSpec::coupled(e1.clone(), e2.clone(), 4.0), 3).unwrap();
    let p = derive_parameters(&e1, &e2, 15.0, &g).unwrap();
    assert!(matches!(euler_lagrange_residual(&g, &st, &p, 1e-8), Err(Error::HypothesisUnmet(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn detection_shrinks_as_epsilon_grows(e1 in 1.0f64..80.0, e2 in 1.0f64..80.0, seed in 0u64..1000) {
        let geom = TorusGeometry::build(&[1.0], &[32], 1.0).unwrap();
        let c = [(seed % 32) as f64 / 32.0, ((seed / 32) % 32) as f64 / 32.0];
        let q: Vec<f64> = bump(&geom, &c, 0.05, 40.0);
        let (lo, hi) = (e1.min(e2), e1.max(e2));
        let a = concentration_detect(&geom, &[q.clone()], lo, &[0.2]).unwrap();
        let b = concentration_detect(&geom, &[q], hi, &[0.2]).unwrap();
        let total = |r: &vortexlab_core::analysis::ConcentrationReport| r.cluster_sizes.iter().sum::<usize>();
        prop_assert!(total(&b) <= total(&a));
    }

    #[test]
    fn small_ball_scaled_mass_bounded_by_sup(r in 0.02f64..0.4, amp in 0.1f64..5.0) {
        let geom = TorusGeometry::build(&[1.0, 1.0], &[8, 8], 1.0).unwrap();
        let q: Vec<f64> = (0..geom.npts()).map(|p| amp * (1.0 + (2.0 * PI * geom.coord(p, 1)).sin())).collect();
        let prof = scaled_energy_profile(&geom, &q, &[0.5; 4], &[r]).unwrap();
        prop_assert!(prof.values[0] <= 2.0 * amp * PI * PI / 2.0 * r.powi(4) + prof.slack[0]);
    }
}
