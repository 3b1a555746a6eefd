//! Acceptance criteria, one test each. Every test prints a single
//! `criterion N: ... PASS|FAIL` line before asserting.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use serde_json::json;
use vortexlab_core::analysis::{concentration_detect, euler_lagrange_residual, lift_to_surface, monotonicity_check, scaled_energy_profile};
use vortexlab_core::dimred::{verify_density_identity, verify_integral_identity};
use vortexlab_core::fields::{random_state, BundleSpec, FieldState, RandomSpec, StateKind};
use vortexlab_core::functional::{chern_weil_degree, density_terms, derive_parameters, derive_parameters_raw, displace, ymh_energy, ymh_gradient, Gradient, ParameterSet};
use vortexlab_core::solvers::{embed_vortex_as_coupled, solve_abelian_vortex, solve_second_connection, SolveOptions, ZeroData};
use vortexlab_core::stability::{correspondence_smoke_test, pair_is_stable, tau_walls, SplitModel};
use vortexlab_core::{Error, Torus};

fn verdict(n: usize, name: &str, pass: bool, detail: String) {
    println!("criterion {n:>2}: {name:<44} {} ({detail})", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} failed: {detail}");
}

fn curve(n: usize) -> Torus {
    Torus::build(&[1.0], &[n], 1.0).unwrap()
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

#[test]
fn c01_bogomolny_minimum() {
    let start = Instant::now();
    let geom = curve(128);
    let tau = 1.1 * 4.0 * PI;
    let sol = solve_abelian_vortex(&BundleSpec::new(1, 1), ZeroData::Auto, tau, &geom, &SolveOptions::default()).unwrap();
    let elapsed = start.elapsed();
    let e = sol.certificate.energy.total;
    let rel = (e - 2.0 * PI * tau).abs() / (2.0 * PI * tau);
    let pass = rel <= 1e-5 && elapsed < Duration::from_secs(60);
    verdict(1, "Bogomolny minimum, degree 1 on 128^2", pass, format!("relative gap {rel:.2e}, {:.1} s", secs(elapsed)));
}

#[test]
fn c02_existence_threshold() {
    let start = Instant::now();
    let geom = curve(64);
    let e = BundleSpec::new(1, 1);
    let forced = SolveOptions { force: true, ..SolveOptions::default() };
    let mut bad = vec![];
    for f in [1.05, 1.1, 1.3] {
        match solve_abelian_vortex(&e, ZeroData::Auto, f * 4.0 * PI, &geom, &forced) {
            Ok(s) if s.certificate.passed => {}
            other => bad.push(format!("{f}: expected convergence, got {:?}", other.map(|s| s.certificate.relative_gap))),
        }
    }
    for f in [0.7, 0.9, 0.95] {
        match solve_abelian_vortex(&e, ZeroData::Auto, f * 4.0 * PI, &geom, &forced) {
            Err(Error::Diverged { .. }) | Err(Error::SingularLinearization(_)) => {}
            other => bad.push(format!("{f}: expected divergence, got {:?}", other.map(|s| s.certificate.relative_gap))),
        }
    }
    let elapsed = start.elapsed();
    let pass = bad.is_empty() && elapsed < Duration::from_secs(300);
    verdict(2, "existence threshold across tau = 4pi", pass, if bad.is_empty() { format!("{:.1} s", secs(elapsed)) } else { bad.join("; ") });
}

fn random_triples() -> Vec<(Torus, ParameterSet, FieldState<f64>)> {
    let geom = curve(64);
    let mut out = vec![];
    for (e1, tau) in [(BundleSpec::new(1, 1), 20.0), (BundleSpec::new(2, 1), 12.0)] {
        let e2 = BundleSpec::trivial();
        let params = derive_parameters(&e1, &e2, tau, &geom).unwrap();
        for seed in 0..100 {
            let st = random_state(&geom, &RandomSpec::coupled(e1.clone(), e2.clone(), 4.0), 100 + seed).unwrap();
            out.push((geom.clone(), params.clone(), st));
        }
    }
    out
}

#[test]
fn c03_pointwise_density_identity() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (geom, params, st) in random_triples() {
        worst = worst.max(verify_density_identity(&geom, &st, &params).unwrap());
    }
    let elapsed = start.elapsed();
    let pass = worst <= 1e-10 && elapsed < Duration::from_secs(120);
    verdict(3, "pointwise |F|^2 = e_tau + c(tau), 200 triples", pass, format!("max residual {worst:.2e}, {:.1} s", secs(elapsed)));
}

#[test]
fn c04_integral_identity_and_constants() {
    let mut gap: f64 = 0.0;
    for (geom, params, st) in random_triples().into_iter().step_by(10) {
        gap = gap.max(verify_integral_identity(&geom, &st, &params).unwrap().gap);
    }
    let mut sigma_gap: f64 = 0.0;
    let mut cw_gap: f64 = 0.0;
    for (r1, r2, d1, d2) in [(1, 1, 0, 0), (1, 1, 1, 0), (2, 1, 1, 0), (2, 2, 3, -1), (3, 1, 2, 1)] {
        for vol in [1.0, 2.5] {
            for tau in [5.0, 16.0 * PI, 100.0] {
                let e1 = BundleSpec::new(r1, d1);
                let e2 = BundleSpec::new(r2, d2);
                if let Ok(p) = derive_parameters_raw(&e1, &e2, tau, vol) {
                    sigma_gap = sigma_gap.max(p.sigma_identity_gap().unwrap() / p.tau.abs().max(1.0));
                    cw_gap = cw_gap.max(p.chern_weil_gap() / p.tau.abs().max(1.0));
                }
            }
        }
    }
    let pass = gap <= 1e-8 && sigma_gap <= 1e-12 && cw_gap <= 1e-12;
    verdict(4, "integral identity and constants", pass, format!("gap {gap:.2e}, sigma {sigma_gap:.2e}, Chern-Weil {cw_gap:.2e}"));
}

fn as_direction(st: &FieldState<f64>) -> Gradient<f64> {
    Gradient { a1: st.a1.a.clone(), a2: st.a2.a.clone(), phi: st.phi.clone() }
}

#[test]
fn c05_gradient_against_finite_differences() {
    let surface = Torus::build(&[1.0, 1.0], &[8, 8], 1.0).unwrap();
    let c = curve(32);
    let cases: Vec<(Torus, RandomSpec, ParameterSet)> = (0..10)
        .map(|k| match k % 3 {
            0 => {
                let e = BundleSpec::new(1, 1 + k as i64 / 3);
                (c.clone(), RandomSpec::vortex(e.clone(), 4.0), ParameterSet::vortex(&e, 20.0, &c))
            }
            1 => {
                let (e1, e2) = (BundleSpec::new(2, 1), BundleSpec::trivial());
                let p = derive_parameters(&e1, &e2, 15.0, &c).unwrap();
                (c.clone(), RandomSpec::coupled(e1, e2, 4.0), p)
            }
            _ => {
                let (e1, e2) = (BundleSpec::new(1, 0), BundleSpec::trivial());
                let p = derive_parameters(&e1, &e2, 5.0, &surface).unwrap();
                (surface.clone(), RandomSpec::coupled(e1, e2, 4.0), p)
            }
        })
        .collect();
    let mut worst: f64 = 0.0;
    for (k, (geom, spec, params)) in cases.iter().enumerate() {
        let st = random_state(geom, spec, 500 + k as u64).unwrap();
        let g = ymh_gradient(geom, &st, params).unwrap();
        for j in 0..10 {
            let dir = as_direction(&random_state(geom, spec, 10_000 + 100 * k as u64 + j).unwrap());
            let h = 1e-4;
            let ep = ymh_energy(geom, &displace(&st, &dir, h), params).unwrap().total;
            let em = ymh_energy(geom, &displace(&st, &dir, -h), params).unwrap().total;
            let fd = (ep - em) / (2.0 * h);
            let mut an = g.inner(&dir, geom);
            if st.kind == StateKind::Vortex {
                an -= g.a2.iter().zip(&dir.a2).map(|(x, y)| geom.integrate_dot(x, y)).sum::<f64>();
            }
            worst = worst.max((fd - an).abs() / fd.abs().max(an.abs()).max(1e-12));
        }
    }
    verdict(5, "gradient vs central differences, 10 x 10", worst <= 1e-5, format!("max relative error {worst:.2e}"));
}

#[test]
fn c06_chern_weil_integrality() {
    let c = curve(32);
    let surface = Torus::build(&[1.0, 1.0], &[8, 8], 1.0).unwrap();
    let mut worst: f64 = 0.0;
    for k in 0..50u64 {
        let (geom, e) = if k % 5 == 4 {
            (&surface, BundleSpec::new(1, k as i64 % 3).with_flux(vec![vec![1 + k as i64 % 3, -1]]))
        } else {
            (&c, BundleSpec::new(1, k as i64 % 7 - 3))
        };
        let st = random_state(geom, &RandomSpec::vortex(e, 3.0), 900 + k).unwrap();
        let d = chern_weil_degree(geom, &st.a1);
        worst = worst.max((d - d.round()).abs());
    }
    verdict(6, "Chern-Weil integrality, 50 states", worst <= 1e-8, format!("max distance to integer {worst:.2e}"));
}

#[test]
fn c07_coupled_embedding() {
    let geom = curve(64);
    let opts = SolveOptions::default();
    let v = solve_abelian_vortex(&BundleSpec::new(1, 1), ZeroData::Auto, 1.1 * 4.0 * PI, &geom, &opts).unwrap();
    let c = embed_vortex_as_coupled(&v, &geom, &opts).unwrap();
    let r = &c.residuals;
    let phi = v.state.phi.scale_re(std::f64::consts::FRAC_1_SQRT_2);
    let rejected = matches!(solve_second_connection(&phi, c.params.tau_prime + 1.0, &geom, &opts), Err(Error::IncompatibleTopology(_)));
    let pass = r.max() <= 1e-8 && rejected;
    verdict(7, "coupled embedding and topology rejection", pass, format!("residuals {:.2e}/{:.2e}/{:.2e}, rejected {rejected}", r.moment1, r.moment2, r.holomorphic));
}

#[test]
fn c08_euler_lagrange_convergence_on_surface() {
    let start = Instant::now();
    let opts = SolveOptions::default();
    let tau_v = 1.1 * 4.0 * PI;
    let mut res = vec![];
    for n in [16usize, 32] {
        let c = curve(n);
        let v = solve_abelian_vortex(&BundleSpec::new(1, 1), ZeroData::Auto, tau_v, &c, &opts).unwrap();
        let coupled = embed_vortex_as_coupled(&v, &c, &opts).unwrap();
        let surface = Torus::build(&[1.0, 1.0], &[n, n], 1.0).unwrap();
        let st = lift_to_surface(&c, &coupled.state, &surface).unwrap();
        let params = derive_parameters(&st.a1.bundle, &st.a2.bundle, coupled.params.tau, &surface).unwrap();
        res.push(euler_lagrange_residual(&surface, &st, &params, 1e-8).unwrap().max());
    }
    let elapsed = start.elapsed();
    let ratio = res[0] / res[1];
    let pass = ratio >= 3.0 && elapsed < Duration::from_secs(600);
    verdict(8, "Euler-Lagrange residual on T^4, 16^4 -> 32^4", pass, format!("{:.3e} -> {:.3e}, ratio {ratio:.2}, {:.1} s", res[0], res[1], secs(elapsed)));
}

#[test]
fn c09_monotonicity_of_constant_curvature_connection() {
    let geom = Torus::build(&[1.0, 1.0], &[32, 32], 1.0).unwrap();
    let e = BundleSpec::new(1, 2).with_flux(vec![vec![1, 1]]);
    let st = FieldState::zero(StateKind::Vortex, &e, &BundleSpec::trivial(), &geom).unwrap();
    let params = ParameterSet::vortex(&e, 0.0, &geom);
    let density = density_terms(&geom, &st, &params).unwrap().curvature1;
    let radii: Vec<f64> = (0..9).map(|j| 0.05 + 0.025 * j as f64).collect();
    let prof = scaled_energy_profile(&geom, &density, &[0.5; 4], &radii).unwrap();
    let v = monotonicity_check(&prof, true);
    let worst = v.worst_violation;
    verdict(9, "monotone scaled energy on T^4, r in [0.05, 0.25]", worst <= 1e-3, format!("largest drop {worst:.3e}, negative when increasing"));
}

fn bump(geom: &Torus, center: &[f64], lambda: f64, mass: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..geom.npts()).map(|p| (-geom.distance_sq(p, center) / (2.0 * lambda * lambda)).exp()).collect();
    let total = geom.integrate(&raw);
    raw.iter().map(|v| v * mass / total).collect()
}

#[test]
fn c10_concentration_detection() {
    let geom = Torus::build(&[1.0, 1.0], &[16, 16], 1.0).unwrap();
    let mass = 8.0 * PI * PI;
    let widths = [0.06, 0.05, 0.04];
    let x0 = [0.25, 0.5, 0.75, 0.25];
    let single: Vec<Vec<f64>> = widths.iter().map(|&l| bump(&geom, &x0, l, mass).iter().map(|v| v + 1.0).collect()).collect();
    let one = concentration_detect(&geom, &single, mass / 2.0, &[0.3, 0.2]).unwrap();
    let theta_err = one.theta_estimates.first().map(|t| (t - mass).abs() / mass).unwrap_or(f64::INFINITY);
    let found_one = one.detected_points == vec![x0.to_vec()] && theta_err <= 0.05;

    let x1 = [0.75, 0.0, 0.25, 0.75];
    let double: Vec<Vec<f64>> = widths
        .iter()
        .map(|&l| bump(&geom, &x0, l, mass).iter().zip(bump(&geom, &x1, l, 2.0 * mass)).map(|(a, b)| a + b + 1.0).collect())
        .collect();
    let two = concentration_detect(&geom, &double, mass / 2.0, &[0.3, 0.2]).unwrap();
    let mut pts = two.detected_points.clone();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let found_two = pts == vec![x0.to_vec(), x1.to_vec()];
    verdict(10, "concentration detection, one and two points", found_one && found_two, format!("theta error {theta_err:.3}, two-point {:?}", two.detected_points));
}

#[test]
fn c11_stability_matches_solver_on_line_bundles() {
    let geom = curve(64);
    let opts = SolveOptions::default();
    let mut mismatches = vec![];
    for d in [1i64, 2] {
        let model = SplitModel::new(vec![d], vec![0], 1.0).unwrap();
        let walls = tau_walls(&model).unwrap();
        for f in [0.7, 0.85, 0.95, 1.0, 1.05, 1.15, 1.3] {
            let tau = f * 4.0 * PI * d as f64;
            let r = correspondence_smoke_test(&model, tau, &geom, &opts).unwrap();
            if r.verdict.is_stable() != r.solver_converged {
                mismatches.push(format!("d={d} tau_hat/d={f}: {:?} vs converged {}", r.verdict, r.solver_converged));
            }
            let on_wall = walls.walls.iter().any(|w| (w - tau).abs() <= 1e-12 * w.abs().max(1.0));
            if pair_is_stable(&model, tau).unwrap().is_wall() != on_wall {
                mismatches.push(format!("d={d} tau_hat/d={f}: wall verdict disagrees with wall list"));
            }
        }
        for &w in &walls.walls {
            if !pair_is_stable(&model, w).unwrap().is_wall() {
                mismatches.push(format!("d={d}: listed wall {w} is not a Wall verdict"));
            }
        }
    }
    verdict(11, "stability verdict <=> solver convergence", mismatches.is_empty(), if mismatches.is_empty() { "14 points, 2 models".into() } else { mismatches.join("; ") });
}

fn run_cli(dir: &Path, k: usize, cfg: serde_json::Value) -> std::path::PathBuf {
    let out = dir.join(format!("out{k}"));
    let mut cfg = cfg;
    cfg["output"] = json!(out);
    let path = dir.join(format!("cfg{k}.json"));
    std::fs::write(&path, cfg.to_string()).unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_vortexlab")).args(["run", path.to_str().unwrap()]).status().unwrap();
    assert!(status.success());
    out
}

#[test]
fn c12_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let geometry = json!({ "dim": 1, "periods": [1.0], "grid": [32], "kahler_scale": 1.0 });
    let configs = [
        json!({ "experiment": "embed-coupled", "output": "", "geometry": geometry, "bundle": { "rank": 1, "degree": 1 }, "tau": 15.0 }),
        json!({ "experiment": "solve-coupled", "output": "", "geometry": geometry, "bundle": { "rank": 2, "degree": 1 }, "tau": 3.0 * PI, "seed": 4,
                "solver": { "max_iters": 3000, "residual_tol": 1e-5 } }),
        json!({ "experiment": "check-dimred", "output": "", "geometry": geometry, "bundle": { "rank": 2, "degree": 1 }, "tau": 12.0, "samples": 3, "seed": 9 }),
    ];
    let mut differing = vec![];
    let mut files = 0;
    for (k, cfg) in configs.iter().enumerate() {
        let a = run_cli(tmp.path(), 2 * k, cfg.clone());
        let b = run_cli(tmp.path(), 2 * k + 1, cfg.clone());
        let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        for name in names {
            files += 1;
            if std::fs::read(a.join(&name)).unwrap() != std::fs::read(b.join(&name)).unwrap_or_default() {
                differing.push(name.to_string_lossy().into_owned());
            }
        }
    }
    verdict(12, "byte-identical repeated runs", differing.is_empty() && files > 0, format!("{files} files compared, differing {differing:?}"));
}
