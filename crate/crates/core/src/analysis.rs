//! Local energy analysis on flat tori: scaled-energy profiles, monotonicity,
//! concentration detection for synthetic families, Euler-Lagrange residuals and
//! energy bookkeeping.

use std::collections::VecDeque;
use std::f64::consts::PI;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{BundleSpec, ConnectionState, FieldState, StateKind};
use crate::functional::{vortex_residuals, ParameterSet};
use crate::geometry::TorusGeometry;
use crate::grid::Field;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
    /// `r^{4-n} ∫_{B_r} e dv`.
    pub values: Vec<f64>,
    /// Quadrature tolerance of a sharp mask: sup e times the volume of the
    /// shell of half-diagonal width around the sphere.
    pub slack: Vec<f64>,
}

impl DensityProfile {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("radius,value,slack\n");
        for ((r, v), s) in self.radii.iter().zip(&self.values).zip(&self.slack) {
            out.push_str(&format!("{r:.17e},{v:.17e},{s:.17e}\n"));
        }
        out
    }
}

fn ball_volume(n: usize, r: f64) -> f64 {
    if n == 2 {
        PI * r * r
    } else {
        PI * PI / 2.0 * r.powi(4)
    }
}

pub fn scaled_energy_profile<T: Real>(geom: &TorusGeometry<T>, density: &[T], center: &[T], radii: &[T]) -> Result<DensityProfile> {
    if density.len() != geom.npts() {
        return Err(Error::ShapeMismatch(format!("density has {} points, grid has {}", density.len(), geom.npts())));
    }
    if radii.windows(2).any(|w| !(w[0] < w[1])) || radii.first().is_some_and(|r| !(*r > T::zero())) {
        return Err(Error::InvalidParameter("radii must be positive and strictly increasing".into()));
    }
    let n = geom.real_dim();
    let sup = density.iter().fold(T::zero(), |a, &b| a.max(b.mag())).as_f64();
    let shell = (n as f64).sqrt() * geom.max_spacing().as_f64() * geom.kahler_scale().as_f64().sqrt() / 2.0;
    let rows: Vec<(f64, f64)> = radii
        .par_iter()
        .map(|&r| {
            let mask = geom.ball_mask(center, r)?;
            let mass = geom.integrate_fn(|p| mask[p] * density[p]).as_f64();
            let rf = r.as_f64();
            let w = rf.powi(4 - n as i32);
            Ok((w * mass, w * sup * (ball_volume(n, rf + shell) - ball_volume(n, (rf - shell).max(0.0)))))
        })
        .collect::<Result<_>>()?;
    Ok(DensityProfile {
        center: center.iter().map(|c| c.as_f64()).collect(),
        radii: radii.iter().map(|r| r.as_f64()).collect(),
        values: rows.iter().map(|r| r.0).collect(),
        slack: rows.iter().map(|r| r.1).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityVerdict {
    pub nondecreasing: bool,
    /// Largest drop `values[i] - values[i+1]`; negative when strictly increasing.
    pub worst_violation: f64,
    /// Index `i+1` of the radius where the largest drop occurs.
    pub location: Option<usize>,
    /// Set when the profile does not come from a critical configuration, in
    /// which case the verdict carries no claim.
    pub hypothesis_unmet: bool,
}

pub fn monotonicity_check(profile: &DensityProfile, stationary: bool) -> MonotonicityVerdict {
    let mut worst = f64::NEG_INFINITY;
    let mut location = None;
    let mut ok = true;
    for i in 0..profile.values.len().saturating_sub(1) {
        let drop = profile.values[i] - profile.values[i + 1];
        if drop > profile.slack[i] + profile.slack[i + 1] {
            ok = false;
        }
        if drop > worst {
            worst = drop;
            location = Some(i + 1);
        }
    }
    MonotonicityVerdict { nondecreasing: ok, worst_violation: if location.is_some() { worst } else { 0.0 }, location, hypothesis_unmet: !stationary }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub epsilon: f64,
    pub radii: Vec<f64>,
    /// One representative per connected cluster of points above threshold.
    pub detected_points: Vec<Vec<f64>>,
    pub detected_indices: Vec<usize>,
    /// Scaled mass at the smallest radius, maximized over the cluster.
    pub theta_estimates: Vec<f64>,
    pub cluster_sizes: Vec<usize>,
}

/// Scaled ball mass `r^{4-n} ∫_{B_r(x)} q` at every grid point, by periodic convolution.
pub fn scaled_mass_field<T: Real>(geom: &TorusGeometry<T>, density: &[T], r: T) -> Result<Vec<T>> {
    let origin = vec![T::zero(); geom.real_dim()];
    let kernel = geom.fft(&Field::from_real(&geom.ball_mask(&origin, r)?));
    Ok(convolve(geom, density, &kernel, r))
}

fn convolve<T: Real>(geom: &TorusGeometry<T>, density: &[T], kernel_hat: &Field<T>, r: T) -> Vec<T> {
    let mut hat = geom.fft(&Field::from_real(density));
    for (z, k) in hat.data.iter_mut().zip(&kernel_hat.data) {
        *z = *z * *k;
    }
    let w = r.powi(4 - geom.real_dim() as i32) * geom.cell_volume();
    geom.ifft(&hat).data.iter().map(|z| z.re * w).collect()
}

pub fn concentration_detect<T: Real>(geom: &TorusGeometry<T>, family: &[Vec<T>], epsilon: f64, r_schedule: &[T]) -> Result<ConcentrationReport> {
    if family.is_empty() || r_schedule.is_empty() {
        return Err(Error::InvalidParameter("family and radius schedule must be nonempty".into()));
    }
    if family.iter().any(|q| q.len() != geom.npts()) {
        return Err(Error::ShapeMismatch("family densities must live on the common grid".into()));
    }
    if r_schedule.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::InvalidParameter("radius schedule must be strictly decreasing".into()));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    let npts = geom.npts();
    let origin = vec![T::zero(); geom.real_dim()];
    let r_min = *r_schedule.last().unwrap();
    let kernel = geom.fft(&Field::from_real(&geom.ball_mask(&origin, r_min)?));
    // Discrete liminf over the family: the minimum over the supplied tail.
    let theta = family
        .par_iter()
        .map(|q| convolve(geom, q, &kernel, r_min))
        .reduce_with(|a, b| a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect())
        .unwrap();
    let peak: Vec<T> = (0..npts).map(|p| family.iter().fold(T::infinity(), |a, q| a.min(q[p]))).collect();
    let eps = T::lit(epsilon);
    let above: Vec<bool> = theta.iter().map(|&v| v >= eps).collect();

    let mut seen = vec![false; npts];
    let mut report = ConcentrationReport {
        epsilon,
        radii: r_schedule.iter().map(|r| r.as_f64()).collect(),
        detected_points: vec![],
        detected_indices: vec![],
        theta_estimates: vec![],
        cluster_sizes: vec![],
    };
    for start in 0..npts {
        if !above[start] || seen[start] {
            continue;
        }
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        let (mut best, mut size, mut theta_max) = (start, 0usize, T::zero());
        while let Some(p) = queue.pop_front() {
            size += 1;
            theta_max = theta_max.max(theta[p]);
            if peak[p] > peak[best] {
                best = p;
            }
            for ax in 0..geom.real_dim() {
                for step in [-1isize, 1] {
                    let q = geom.shifted(p, ax, step);
                    if above[q] && !seen[q] {
                        seen[q] = true;
                        queue.push_back(q);
                    }
                }
            }
        }
        report.detected_indices.push(best);
        report.detected_points.push(geom.coords(best)[..geom.real_dim()].iter().map(|c| c.as_f64()).collect());
        report.theta_estimates.push(theta_max.as_f64());
        report.cluster_sizes.push(size);
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElResiduals {
    /// `d*F₁ - J d(ΛF₁)` with `ΛF₁ = (i/2)(φφ* - τ)` substituted.
    pub first: f64,
    /// `d*F₂ - J d(ΛF₂)` with `ΛF₂ = -(i/2)(φ*φ + τ′)` substituted.
    pub second: f64,
    /// `∂̄_{A₁⊗A₂*} φ`.
    pub holomorphic: f64,
    pub grid: Vec<usize>,
}

impl ElResiduals {
    pub fn max(&self) -> f64 {
        self.first.max(self.second).max(self.holomorphic)
    }
}

/// Central difference of a periodic scalar.
fn fd<T: Real>(geom: &TorusGeometry<T>, f: &[Complex<T>], ax: usize) -> Vec<Complex<T>> {
    let w = T::one() / (T::lit(2.0) * geom.spacing(ax));
    (0..geom.npts()).map(|p| (f[geom.shifted(p, ax, 1)] - f[geom.shifted(p, ax, -1)]) * w).collect()
}

/// Central covariant difference of a section with Landau charges `beta`,
/// background `-i β x_k dy_k`, plus a periodic abelian perturbation.
fn covariant_fd<T: Real>(geom: &TorusGeometry<T>, phi: &[Complex<T>], beta: [T; 2], a: &[Complex<T>], ax: usize) -> Vec<Complex<T>> {
    let k = ax / 2;
    let h = geom.spacing(ax);
    let n = geom.shape()[ax];
    let l = geom.period_of_axis(ax);
    let w = T::one() / (T::lit(2.0) * h);
    (0..geom.npts())
        .map(|p| {
            let (pp, pm) = (geom.shifted(p, ax, 1), geom.shifted(p, ax, -1));
            let (mut up, mut um) = (phi[pp], phi[pm]);
            if ax % 2 == 0 {
                let y = geom.coord(p, ax + 1);
                let j = geom.multi_index(p)[ax];
                if j + 1 == n {
                    up = up * Complex::from_polar(T::one(), beta[k] * l * y);
                }
                if j == 0 {
                    um = um * Complex::from_polar(T::one(), -beta[k] * l * y);
                }
            } else {
                let x = geom.coord(p, ax - 1);
                up = up * Complex::from_polar(T::one(), -beta[k] * x * h);
                um = um * Complex::from_polar(T::one(), beta[k] * x * h);
            }
            (up - um) * w + a[p] * phi[p]
        })
        .collect()
}

fn scalar_data<T: Real>(f: &Field<T>) -> Vec<Complex<T>> {
    f.data.clone()
}

/// `d*F - J d(ΛF)` for an abelian curvature given by background `b` and
/// perturbation `a`, against the predicted `ΛF`; returns the sup norm.
fn el_line<T: Real>(geom: &TorusGeometry<T>, b: [T; 2], a: &[Vec<Complex<T>>], lambda: &[Complex<T>]) -> T {
    let n = geom.real_dim();
    let s = geom.kahler_scale();
    let da: Vec<Vec<Vec<Complex<T>>>> = (0..n).map(|mu| (0..n).map(|nu| fd(geom, &a[nu], mu)).collect()).collect();
    let curv = |mu: usize, nu: usize, p: usize| {
        let mut v = da[mu][nu][p] - da[nu][mu][p];
        if mu % 2 == 0 && nu == mu + 1 {
            v = v - Complex::new(T::zero(), b[mu / 2]);
        } else if nu % 2 == 0 && mu == nu + 1 {
            v = v + Complex::new(T::zero(), b[nu / 2]);
        }
        v
    };
    let dl: Vec<Vec<Complex<T>>> = (0..n).map(|ax| fd(geom, lambda, ax)).collect();
    let mut worst = T::zero();
    for nu in 0..n {
        let mut lhs = vec![Complex::new(T::zero(), T::zero()); geom.npts()];
        for mu in 0..n {
            let f: Vec<Complex<T>> = (0..geom.npts()).map(|p| curv(mu, nu, p)).collect();
            for (l, d) in lhs.iter_mut().zip(fd(geom, &f, mu)) {
                *l = *l - d / s;
            }
        }
        // (Jα)_{x_k} = α_{y_k}, (Jα)_{y_k} = -α_{x_k}.
        let rhs: Vec<Complex<T>> = if nu % 2 == 0 { dl[nu + 1].clone() } else { dl[nu - 1].iter().map(|z| -*z).collect() };
        for (l, r) in lhs.iter().zip(&rhs) {
            worst = worst.max((*l - *r).norm());
        }
    }
    worst
}

/// Evaluates the Euler-Lagrange system satisfied by coupled vortices with
/// second-order finite differences, on an abelian triple already certified by
/// the spectral residuals.
pub fn euler_lagrange_residual<T: Real>(geom: &TorusGeometry<T>, state: &FieldState<T>, params: &ParameterSet, tol: f64) -> Result<ElResiduals> {
    if state.kind != StateKind::Coupled {
        return Err(Error::HypothesisUnmet("input is not a coupled triple".into()));
    }
    for r in [state.a1.rank(), state.a2.rank()] {
        if r != 1 {
            return Err(Error::UnsupportedRank(r));
        }
    }
    let res = vortex_residuals(geom, state, params)?;
    if !(res.max() <= tol) {
        return Err(Error::HypothesisUnmet(format!("vortex residual {:e} exceeds {tol:e}", res.max())));
    }
    let n = geom.real_dim();
    let s = geom.kahler_scale();
    let phi = scalar_data(&state.phi);
    let a1: Vec<_> = state.a1.a.iter().map(scalar_data).collect();
    let a2: Vec<_> = state.a2.a.iter().map(scalar_data).collect();
    let half_i = Complex::new(T::zero(), T::lit(0.5));
    let tau = Complex::new(T::lit(params.tau), T::zero());
    let tau_p = Complex::new(T::lit(params.tau_prime), T::zero());
    let lam1: Vec<_> = phi.iter().map(|z| half_i * (Complex::new(z.norm_sqr(), T::zero()) - tau)).collect();
    let lam2: Vec<_> = phi.iter().map(|z| -half_i * (Complex::new(z.norm_sqr(), T::zero()) + tau_p)).collect();
    let first = el_line(geom, state.a1.b[0], &a1, &lam1);
    let second = el_line(geom, state.a2.b[0], &a2, &lam2);

    let (b1, b2) = (state.a1.b[0], state.a2.b[0]);
    let beta = [b1[0] - b2[0], b1[1] - b2[1]];
    let d: Vec<Vec<Complex<T>>> = (0..n)
        .map(|ax| {
            let a: Vec<_> = a1[ax].iter().zip(&a2[ax]).map(|(x, y)| *x - *y).collect();
            covariant_fd(geom, &phi, beta, &a, ax)
        })
        .collect();
    let i = Complex::new(T::zero(), T::one());
    let mut holomorphic = T::zero();
    for p in 0..geom.npts() {
        let mut acc = T::zero();
        for k in 0..n / 2 {
            let c = (d[2 * k][p] + i * d[2 * k + 1][p]) * T::lit(0.5);
            acc = acc + c.norm_sqr() * T::lit(2.0) / s;
        }
        holomorphic = holomorphic.max(acc.sqrt());
    }
    Ok(ElResiduals { first: first.as_f64(), second: second.as_f64(), holomorphic: holomorphic.as_f64(), grid: geom.shape()[..n].to_vec() })
}

/// Lifts a solution on `T²` to `T² × T²` (constant along the second factor),
/// with the flux carried by the first complex axis.
pub fn lift_to_surface<T: Real>(curve: &TorusGeometry<T>, state: &FieldState<T>, surface: &TorusGeometry<T>) -> Result<FieldState<T>> {
    if curve.dim() != 1 || surface.dim() != 2 {
        return Err(Error::UnsupportedDimension(surface.dim()));
    }
    if curve.shape()[..2] != surface.shape()[..2] || curve.periods()[0] != surface.periods()[0] || curve.kahler_scale() != surface.kahler_scale() {
        return Err(Error::ShapeMismatch("first factor of the surface must match the curve".into()));
    }
    let extra = (surface.kahler_scale() * surface.periods()[1] * surface.periods()[1]).as_f64();
    let lift_conn = |c: &ConnectionState<T>| -> Result<ConnectionState<T>> {
        let flux: Vec<Vec<i64>> = c.flux.iter().map(|f| vec![f[0], 0]).collect();
        let deg = c.bundle.degree as f64 * extra;
        if (deg - deg.round()).abs() > 1e-9 {
            return Err(Error::NonIntegralFlux { axis: 1, value: deg });
        }
        let bundle = BundleSpec { degree: deg.round() as i64, flux: Some(flux), ..c.bundle.clone() };
        let bg = ConnectionState::background(&bundle, surface)?;
        let lift = |f: &Field<T>| {
            Field::from_fn(surface.npts(), f.rows, f.cols, |p| {
                let idx = surface.multi_index(p);
                f.at(curve.flat_index(&[idx[0], idx[1], 0, 0]))
            })
        };
        let mut a: Vec<Field<T>> = c.a.iter().map(lift).collect();
        a.push(Field::zeros(surface.npts(), c.rank(), c.rank()));
        a.push(Field::zeros(surface.npts(), c.rank(), c.rank()));
        bg.with_perturbation(a)
    };
    let a1 = lift_conn(&state.a1)?;
    let a2 = lift_conn(&state.a2)?;
    let phi = Field::from_fn(surface.npts(), state.phi.rows, state.phi.cols, |p| {
        let idx = surface.multi_index(p);
        state.phi.at(curve.flat_index(&[idx[0], idx[1], 0, 0]))
    });
    match state.kind {
        StateKind::Coupled => FieldState::coupled(a1, a2, phi),
        StateKind::Vortex => FieldState::vortex(a1, phi, surface),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyAudit {
    /// `∫ e` of each family member.
    pub family_energies: Vec<f64>,
    pub limit_energy: f64,
    pub concentrated_mass: f64,
    pub e_tau: f64,
    pub relative_gap: f64,
    pub passed: bool,
    /// Masses divided by `8π²`.
    pub chain_multiplicities: Vec<f64>,
    pub warnings: Vec<String>,
}

pub const AUDIT_TOLERANCE: f64 = 0.02;

pub fn energy_identity_audit<T: Real>(geom: &TorusGeometry<T>, family: &[Vec<T>], limit: &[T], masses: &[f64], e_tau: f64) -> Result<EnergyAudit> {
    if limit.len() != geom.npts() || family.iter().any(|q| q.len() != geom.npts()) {
        return Err(Error::ShapeMismatch("densities must live on the common grid".into()));
    }
    let family_energies: Vec<f64> = family.iter().map(|q| geom.integrate(q).as_f64()).collect();
    let limit_energy = geom.integrate(limit).as_f64();
    let concentrated_mass: f64 = masses.iter().sum();
    let relative_gap = (limit_energy + concentrated_mass - e_tau).abs() / e_tau.abs().max(f64::MIN_POSITIVE);
    let chain_multiplicities: Vec<f64> = masses.iter().map(|m| m / (8.0 * PI * PI)).collect();
    let warnings = chain_multiplicities
        .iter()
        .enumerate()
        .filter(|(_, k)| (*k - k.round()).abs() > 1e-6)
        .map(|(j, k)| format!("mass {j} has non-integer chain multiplicity {k:.6}"))
        .collect();
    Ok(EnergyAudit {
        family_energies,
        limit_energy,
        concentrated_mass,
        e_tau,
        relative_gap,
        passed: relative_gap <= AUDIT_TOLERANCE,
        chain_multiplicities,
        warnings,
    })
}
