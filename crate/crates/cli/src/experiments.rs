//! The named experiments. Each writes its artifacts into the configured output directory.

use std::f64::consts::PI;
use std::path::Path;

use serde::Serialize;
use vortexlab_core::analysis::{
    concentration_detect, energy_identity_audit, euler_lagrange_residual, lift_to_surface, monotonicity_check, scaled_energy_profile, ElResiduals,
};
use vortexlab_core::dimred::{dimred_report, DimredReport};
use vortexlab_core::fields::{random_state, FieldState, RandomSpec, StateKind};
use vortexlab_core::functional::{check_threshold, derive_parameters, density_terms, ymh_density, ParameterSet, Threshold, VortexResiduals};
use vortexlab_core::io::{write_atomic, write_json, write_solution};
use vortexlab_core::solvers::{embed_vortex_as_coupled, gradient_flow, solve_abelian_vortex, Certificate, FlowStatus, SolveOptions, ZeroData};
use vortexlab_core::stability::{correspondence_smoke_test, pair_is_stable, tau_walls, SplitModel, Verdict};
use vortexlab_core::{Error, Solution, State, Torus};

use crate::config::ExperimentConfig;
use crate::error::{error_code, CliError, CliResult};

#[derive(Serialize)]
pub struct CertificateDoc {
    pub experiment: String,
    pub kind: StateKind,
    pub geometry_hash: String,
    pub params: ParameterSet,
    pub residuals: VortexResiduals,
    pub max_residual: f64,
    pub tolerance: f64,
    pub iterations: usize,
    pub certificate: Certificate,
    pub passed: bool,
}

pub fn certificate_doc(experiment: &str, geom: &Torus, sol: &Solution, tolerance: f64) -> CertificateDoc {
    let max_residual = sol.residuals.max();
    CertificateDoc {
        experiment: experiment.to_string(),
        kind: sol.state.kind,
        geometry_hash: geom.config().hash(),
        params: sol.params.clone(),
        residuals: sol.residuals.clone(),
        max_residual,
        tolerance,
        iterations: sol.iterations,
        certificate: sol.certificate.clone(),
        passed: sol.certificate.passed && max_residual <= tolerance,
    }
}

#[derive(Serialize)]
struct FailureDoc<'a> {
    experiment: &'a str,
    error: &'static str,
    message: String,
}

fn write_failure(cfg: &ExperimentConfig, e: &Error) -> CliResult<()> {
    let doc = FailureDoc { experiment: &cfg.experiment, error: error_code(e), message: e.to_string() };
    write_json(&cfg.output.join("failure.json"), &doc)?;
    Ok(())
}

fn save_solution(dir: &Path, name: &str, experiment: &str, geom: &Torus, sol: &Solution, tol: f64) -> CliResult<CertificateDoc> {
    let doc = certificate_doc(experiment, geom, sol, tol);
    let meta = serde_json::to_value(&doc).map_err(|e| CliError::io(e.to_string()))?;
    write_solution(&dir.join(format!("{name}.vxlb")), geom, &sol.state, &sol.params, meta)?;
    Ok(doc)
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    write_atomic(path, text.as_bytes())?;
    Ok(())
}

fn build_geometry(cfg: &ExperimentConfig) -> CliResult<Torus> {
    cfg.geometry()?.build().map_err(|e| CliError::config(format!("field `geometry`: {e}")))
}

fn solve_or_fail(cfg: &ExperimentConfig, geom: &Torus, tau: f64, opts: &SolveOptions) -> CliResult<Solution> {
    solve_abelian_vortex(cfg.bundle()?, ZeroData::Auto, tau, geom, opts).or_else(|e| {
        write_failure(cfg, &e)?;
        Err(e.into())
    })
}

pub fn run(cfg: &ExperimentConfig) -> CliResult<()> {
    std::fs::create_dir_all(&cfg.output).map_err(|e| CliError::io(format!("creating {}: {e}", cfg.output.display())))?;
    match cfg.experiment.as_str() {
        "solve-vortex" => solve_vortex(cfg),
        "solve-coupled" => solve_coupled(cfg),
        "embed-coupled" => embed_coupled(cfg),
        "check-dimred" => check_dimred(cfg),
        "tau-sweep" => tau_sweep(cfg),
        "density-profile" => density_profile(cfg),
        "concentration" => concentration(cfg),
        "stability" => stability(cfg),
        "el-residual" => el_residual(cfg),
        other => Err(CliError::config(format!("field `experiment`: unknown experiment `{other}`"))),
    }
}

fn solve_vortex(cfg: &ExperimentConfig) -> CliResult<()> {
    let geom = build_geometry(cfg)?;
    let sol = solve_or_fail(cfg, &geom, cfg.tau_value()?, &cfg.solver)?;
    let doc = save_solution(&cfg.output, "solution", &cfg.experiment, &geom, &sol, cfg.solver.acceptance_tol)?;
    write_json(&cfg.output.join("certificate.json"), &doc)?;
    if !doc.passed {
        return Err(CliError::verification(format!("certificate failed: residual {:e}, gap {:e}", doc.max_residual, doc.certificate.relative_gap)));
    }
    Ok(())
}

fn embed_coupled(cfg: &ExperimentConfig) -> CliResult<()> {
    let geom = build_geometry(cfg)?;
    let vortex = solve_or_fail(cfg, &geom, cfg.tau_value()?, &cfg.solver)?;
    let coupled = embed_vortex_as_coupled(&vortex, &geom, &cfg.solver).or_else(|e| {
        write_failure(cfg, &e)?;
        Err(CliError::from(e))
    })?;
    let tol = cfg.solver.acceptance_tol;
    let v = save_solution(&cfg.output, "vortex", &cfg.experiment, &geom, &vortex, tol)?;
    let c = save_solution(&cfg.output, "coupled", &cfg.experiment, &geom, &coupled, tol)?;
    let passed = v.passed && c.passed;
    write_json(&cfg.output.join("certificate.json"), &serde_json::json!({ "vortex": v, "coupled": c, "passed": passed }))?;
    if !passed {
        return Err(CliError::verification("embedded triple failed its certificate"));
    }
    Ok(())
}

fn solve_coupled(cfg: &ExperimentConfig) -> CliResult<()> {
    let geom = build_geometry(cfg)?;
    let (e1, e2) = (cfg.bundle()?.clone(), cfg.bundle2());
    let params = derive_parameters(&e1, &e2, cfg.tau_value()?, &geom)?;
    let start = random_state(&geom, &RandomSpec::coupled(e1, e2, 4.0), cfg.seed)?;
    let flow = gradient_flow(&geom, start, &params, &cfg.solver)?;
    let trace: String = std::iter::once("step,energy\n".to_string())
        .chain(flow.energy_trace.iter().enumerate().map(|(j, e)| format!("{j},{e}\n")))
        .collect();
    write_text(&cfg.output.join("energy_trace.csv"), &trace)?;
    let doc = save_solution(&cfg.output, "solution", &cfg.experiment, &geom, &flow.solution, cfg.solver.acceptance_tol)?;
    write_json(&cfg.output.join("certificate.json"), &serde_json::json!({ "status": flow.status, "gradient_norm": flow.gradient_norm, "certificate": doc }))?;
    match flow.status {
        FlowStatus::Converged => Ok(()),
        status => Err(CliError::diverged(format!("flow ended with status {status:?} at gradient norm {:e}", flow.gradient_norm))),
    }
}

fn check_dimred(cfg: &ExperimentConfig) -> CliResult<()> {
    let geom = build_geometry(cfg)?;
    let (e1, e2) = (cfg.bundle()?.clone(), cfg.bundle2());
    let params = derive_parameters(&e1, &e2, cfg.tau_value()?, &geom)?;
    let spec = RandomSpec::coupled(e1, e2, 4.0);
    let samples = cfg.samples.unwrap_or(10);
    let mut reports: Vec<DimredReport> = Vec::with_capacity(samples);
    let mut worst_scaled: f64 = 0.0;
    for k in 0..samples as u64 {
        let st: State = random_state(&geom, &spec, cfg.seed.wrapping_add(k))?;
        let r = dimred_report(&geom, &st, &params)?;
        let scale = ymh_density(&geom, &st, &params)?.iter().fold(params.c_tau.unwrap_or(0.0).abs().max(1.0), |a, b| a.max(b.abs()));
        worst_scaled = worst_scaled.max(r.max_pointwise_residual / scale);
        reports.push(r);
    }
    let max_res = reports.iter().map(|r| r.max_pointwise_residual).fold(0.0, f64::max);
    let max_gap = reports.iter().map(|r| r.integral_gap).fold(0.0, f64::max);
    let passed = worst_scaled <= 1e-10 && max_gap <= 1e-8;
    write_json(
        &cfg.output.join("dimred_report.json"),
        &serde_json::json!({
            "samples": samples,
            "params": params,
            "max_pointwise_residual": max_res,
            "max_relative_pointwise_residual": worst_scaled,
            "max_integral_gap": max_gap,
            "passed": passed,
            "reports": reports,
        }),
    )?;
    if !passed {
        return Err(CliError::verification(format!("identity residual {worst_scaled:e} or gap {max_gap:e} out of tolerance")));
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepRow {
    tau: f64,
    tau_over_4pi: f64,
    tau_hat: f64,
    threshold: Threshold,
    status: String,
    error: Option<String>,
    iterations: Option<usize>,
    energy: Option<f64>,
    topological_minimum: Option<f64>,
    relative_gap: Option<f64>,
    max_residual: Option<f64>,
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn tau_sweep(cfg: &ExperimentConfig) -> CliResult<()> {
    let geom = build_geometry(cfg)?;
    let bundle = cfg.bundle()?;
    let forced = SolveOptions { force: true, ..cfg.solver.clone() };
    let vol = geom.volume();
    let mut rows = vec![];
    for tau in cfg.tau_list()? {
        let threshold = check_threshold(bundle, tau, &geom);
        let mut row = SweepRow {
            tau,
            tau_over_4pi: tau / (4.0 * PI),
            tau_hat: tau * vol / (4.0 * PI),
            threshold,
            status: String::new(),
            error: None,
            iterations: None,
            energy: None,
            topological_minimum: None,
            relative_gap: None,
            max_residual: None,
        };
        match solve_abelian_vortex(bundle, ZeroData::Auto, tau, &geom, &forced) {
            Ok(sol) => {
                row.status = "converged".into();
                row.iterations = Some(sol.iterations);
                row.energy = Some(sol.certificate.energy.total);
                row.topological_minimum = Some(sol.certificate.energy.topological_minimum);
                row.relative_gap = Some(sol.certificate.relative_gap);
                row.max_residual = Some(sol.residuals.max());
            }
            Err(e) => {
                row.status = match e {
                    Error::Diverged { .. } | Error::SingularLinearization(_) | Error::FieldTooLarge(_) => "diverged".into(),
                    Error::MaxIters(_) => "max-iters".into(),
                    _ => "error".into(),
                };
                row.error = Some(error_code(&e).to_string());
            }
        }
        rows.push(row);
    }
    let mut csv = String::from("tau,tau_over_4pi,tau_hat,threshold,status,error,iterations,energy,topological_minimum,relative_gap,max_residual\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{:?},{},{},{},{},{},{},{}\n",
            r.tau,
            r.tau_over_4pi,
            r.tau_hat,
            r.threshold,
            r.status,
            r.error.as_deref().unwrap_or(""),
            r.iterations.map(|i| i.to_string()).unwrap_or_default(),
            opt(r.energy),
            opt(r.topological_minimum),
            opt(r.relative_gap),
            opt(r.max_residual),
        ));
    }
    write_text(&cfg.output.join("sweep.csv"), &csv)?;
    write_json(&cfg.output.join("sweep.json"), &rows)?;
    Ok(())
}

fn density_profile(cfg: &ExperimentConfig) -> CliResult<()> {
    let geom = build_geometry(cfg)?;
    let bundle = cfg.bundle()?;
    let density: Vec<f64> = match cfg.source.as_deref() {
        Some("vortex") => {
            let sol = solve_or_fail(cfg, &geom, cfg.tau_value()?, &cfg.solver)?;
            ymh_density(&geom, &sol.state, &sol.params)?
        }
        _ => {
            let st = FieldState::zero(StateKind::Vortex, bundle, &vortexlab_core::fields::BundleSpec::trivial(), &geom)?;
            let params = ParameterSet::vortex(bundle, cfg.tau.unwrap_or(0.0), &geom);
            density_terms(&geom, &st, &params)?.curvature1
        }
    };
    let center = cfg.center.clone().unwrap_or_else(|| vec![0.0; geom.real_dim()]);
    let radii = cfg.radii.clone().unwrap_or_default();
    let profile = scaled_energy_profile(&geom, &density, &center, &radii)?;
    let verdict = monotonicity_check(&profile, true);
    write_text(&cfg.output.join("profile.csv"), &profile.to_csv())?;
    write_json(&cfg.output.join("monotonicity.json"), &serde_json::json!({ "profile": profile, "verdict": verdict }))?;
    if !verdict.nondecreasing {
        return Err(CliError::verification(format!("profile decreases by {:e} at radius index {:?}", verdict.worst_violation, verdict.location)));
    }
    Ok(())
}

/// Gaussian of width `lambda` around `center`, normalized to grid mass `mass`.
pub fn grid_bump(geom: &Torus, center: &[f64], lambda: f64, mass: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..geom.npts()).map(|p| (-geom.distance_sq(p, center) / (2.0 * lambda * lambda)).exp()).collect();
    let total = geom.integrate(&raw);
    raw.iter().map(|v| v * mass / total).collect()
}

fn concentration(cfg: &ExperimentConfig) -> CliResult<()> {
    let geom = build_geometry(cfg)?;
    let fam = cfg.family.as_ref().expect("validated");
    if fam.centers.iter().any(|c| c.len() != geom.real_dim()) {
        return Err(CliError::config(format!("field `family.centers`: each center needs {} coordinates", geom.real_dim())));
    }
    let family: Vec<Vec<f64>> = fam
        .widths
        .iter()
        .map(|&l| {
            let mut q = vec![fam.background; geom.npts()];
            for (c, &m) in fam.centers.iter().zip(&fam.masses) {
                for (v, b) in q.iter_mut().zip(grid_bump(&geom, c, l, m)) {
                    *v += b;
                }
            }
            q
        })
        .collect();
    let report = concentration_detect(&geom, &family, cfg.epsilon.expect("validated"), cfg.r_schedule.as_deref().unwrap_or_default())?;
    write_json(&cfg.output.join("concentration.json"), &report)?;
    if let Some(e_tau) = cfg.e_tau {
        let limit = vec![fam.background; geom.npts()];
        let audit = energy_identity_audit(&geom, &family, &limit, &report.theta_estimates, e_tau)?;
        write_json(&cfg.output.join("audit.json"), &audit)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct StabilityRow {
    tau: f64,
    tau_hat: f64,
    verdict: Verdict,
    solver_converged: Option<bool>,
    consistent: Option<bool>,
}

fn verdict_name(v: &Verdict) -> &'static str {
    match v {
        Verdict::Stable => "stable",
        Verdict::Unstable { .. } => "unstable",
        Verdict::Wall { .. } => "wall",
    }
}

fn stability(cfg: &ExperimentConfig) -> CliResult<()> {
    let spec = cfg.model.as_ref().expect("validated");
    let geom = cfg.geometry.as_ref().map(|_| build_geometry(cfg)).transpose()?;
    let vol = match (&geom, spec.vol) {
        (Some(g), Some(v)) if (g.volume() - v).abs() > 1e-12 * v.abs() => {
            return Err(CliError::config(format!("field `model.vol`: {v} differs from the geometry volume {}", g.volume())));
        }
        (Some(g), _) => g.volume(),
        (None, v) => v.unwrap_or(1.0),
    };
    let model = SplitModel::new(spec.summands.clone(), spec.phi_support.clone(), vol).map_err(|e| CliError::config(format!("field `model`: {e}")))?;
    let walls = tau_walls(&model)?;
    let mut rows = vec![];
    for tau in cfg.tau_list()? {
        let verdict = pair_is_stable(&model, tau)?;
        let (solver_converged, consistent) = match (&geom, cfg.solver_check) {
            (Some(g), true) => {
                let r = correspondence_smoke_test(&model, tau, g, &cfg.solver)?;
                (Some(r.solver_converged), Some(r.consistent))
            }
            _ => (None, None),
        };
        rows.push(StabilityRow { tau, tau_hat: model.tau_hat(tau), verdict, solver_converged, consistent });
    }
    let mut csv = String::from("tau,tau_hat,verdict,solver_converged,consistent\n");
    for r in &rows {
        let b = |x: Option<bool>| x.map(|v| v.to_string()).unwrap_or_default();
        csv.push_str(&format!("{},{},{},{},{}\n", r.tau, r.tau_hat, verdict_name(&r.verdict), b(r.solver_converged), b(r.consistent)));
    }
    write_text(&cfg.output.join("stability.csv"), &csv)?;
    write_json(&cfg.output.join("walls.json"), &walls)?;
    write_json(&cfg.output.join("stability.json"), &serde_json::json!({ "model": model, "rows": rows }))?;
    if rows.iter().any(|r| r.consistent == Some(false)) {
        return Err(CliError::verification("stability verdict and solver disagree"));
    }
    Ok(())
}

fn el_residual(cfg: &ExperimentConfig) -> CliResult<()> {
    let gc = cfg.geometry()?;
    let tau = cfg.tau_value()?;
    let grids = cfg.grids.clone().unwrap_or_else(|| vec![16, 32]);
    let mut rows: Vec<ElResiduals> = vec![];
    for &n in &grids {
        let curve = Torus::build(&gc.periods[..1], &[n], gc.kahler_scale).map_err(|e| CliError::config(format!("field `grids`: {e}")))?;
        let vortex = solve_or_fail(cfg, &curve, tau, &cfg.solver)?;
        let coupled = embed_vortex_as_coupled(&vortex, &curve, &cfg.solver)?;
        let el = if gc.dim == 2 {
            let surface = Torus::build(&gc.periods, &[n, n], gc.kahler_scale).map_err(|e| CliError::config(format!("field `geometry`: {e}")))?;
            let st = lift_to_surface(&curve, &coupled.state, &surface)?;
            let params = derive_parameters(&st.a1.bundle, &st.a2.bundle, coupled.params.tau, &surface)?;
            euler_lagrange_residual(&surface, &st, &params, cfg.solver.acceptance_tol)?
        } else {
            euler_lagrange_residual(&curve, &coupled.state, &coupled.params, cfg.solver.acceptance_tol)?
        };
        rows.push(el);
    }
    let ratios: Vec<f64> = rows.windows(2).map(|w| w[0].max() / w[1].max()).collect();
    write_json(&cfg.output.join("el_residual.json"), &serde_json::json!({ "dim": gc.dim, "tau": tau, "rows": rows, "ratios": ratios }))?;
    Ok(())
}
