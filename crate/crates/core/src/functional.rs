//! Yang-Mills-Higgs functionals, their densities and gradients, topological
//! invariants and the τ-derived constants.
//!
//! Pointwise norms use the metric `g = s·δ`: a 2-form has
//! `|F|² = Σ_{μ<ν} |F_μν|² / s²`, a 1-form `|Dφ|² = Σ_μ |D_μφ|² / s`, and
//! matrices the Frobenius norm `tr(X X*)`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{covariant_derivative, curvature, curvature_02, dbar_from_derivatives, BundleSpec, ConnectionState, FieldState, StateKind};
use crate::geometry::TorusGeometry;
use crate::grid::{axis_pairs, pair_index, Field, GridForm};
use crate::linalg::SmallMat;
use crate::scalar::Real;

/// τ and everything derived from it.
///
/// For vortex pairs only `tau`, `tau_hat` and the first rank/degree are meaningful;
/// the coupled constants are `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    pub kind: StateKind,
    pub tau: f64,
    pub tau_hat: f64,
    pub tau_prime: f64,
    pub sigma: Option<f64>,
    pub c_tau: Option<f64>,
    pub big_c_tau: Option<f64>,
    pub ranks: [usize; 2],
    pub degrees: [i64; 2],
    pub volume: f64,
}

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

impl ParameterSet {
    pub fn vortex<T: Real>(bundle: &BundleSpec, tau: f64, geom: &TorusGeometry<T>) -> Self {
        let vol = geom.volume().as_f64();
        Self {
            kind: StateKind::Vortex,
            tau,
            tau_hat: tau * vol / FOUR_PI,
            tau_prime: 0.0,
            sigma: None,
            c_tau: None,
            big_c_tau: None,
            ranks: [bundle.rank, 1],
            degrees: [bundle.degree, 0],
            volume: vol,
        }
    }

    pub fn sigma_identity_gap(&self) -> Option<f64> {
        self.sigma.map(|s| (FOUR_PI / s - (self.tau - self.tau_prime) / 2.0).abs())
    }

    pub fn chern_weil_gap(&self) -> f64 {
        let lhs = self.tau * self.ranks[0] as f64 + self.tau_prime * self.ranks[1] as f64;
        let rhs = FOUR_PI * (self.degrees[0] + self.degrees[1]) as f64 / self.volume;
        (lhs - rhs).abs()
    }
}

/// Coupled parameters for `(E₁, E₂)` at τ: `τ̂ = τ Vol/4π`, `τ′` from
/// `τ r₁ + τ′ r₂ = 4π(d₁ + d₂)/Vol`, `σ = 2 r₂ Vol / ((r₁ + r₂) τ̂ - d₁ - d₂)`,
/// `c(τ) = 16π² r₂/σ² - ¼(τ² r₁ + τ′² r₂)` and `C(τ) = σ c(τ) Vol`.
pub fn derive_parameters_raw(e1: &BundleSpec, e2: &BundleSpec, tau: f64, vol: f64) -> Result<ParameterSet> {
    let (r1, r2) = (e1.rank as f64, e2.rank as f64);
    let (d1, d2) = (e1.degree as f64, e2.degree as f64);
    let tau_hat = tau * vol / FOUR_PI;
    let tau_prime = (FOUR_PI * (d1 + d2) / vol - tau * r1) / r2;
    let denom = (r1 + r2) * tau_hat - d1 - d2;
    if !(denom > 0.0) {
        return Err(Error::NonpositiveSigmaDenominator(denom));
    }
    let sigma = 2.0 * r2 * vol / denom;
    let c_tau = 16.0 * std::f64::consts::PI.powi(2) * r2 / (sigma * sigma) - 0.25 * (tau * tau * r1 + tau_prime * tau_prime * r2);
    Ok(ParameterSet {
        kind: StateKind::Coupled,
        tau,
        tau_hat,
        tau_prime,
        sigma: Some(sigma),
        c_tau: Some(c_tau),
        big_c_tau: Some(sigma * c_tau * vol),
        ranks: [e1.rank, e2.rank],
        degrees: [e1.degree, e2.degree],
        volume: vol,
    })
}

pub fn derive_parameters<T: Real>(e1: &BundleSpec, e2: &BundleSpec, tau: f64, geom: &TorusGeometry<T>) -> Result<ParameterSet> {
    derive_parameters_raw(e1, e2, tau, geom.volume().as_f64())
}

/// Per-point contributions to `e_τ`.
#[derive(Clone, Debug)]
pub struct DensityTerms<T> {
    pub curvature1: Vec<T>,
    pub curvature2: Vec<T>,
    pub kinetic: Vec<T>,
    pub potential1: Vec<T>,
    pub potential2: Vec<T>,
}

impl<T: Real> DensityTerms<T> {
    pub fn total(&self) -> Vec<T> {
        (0..self.kinetic.len())
            .map(|p| self.curvature1[p] + self.curvature2[p] + self.kinetic[p] + self.potential1[p] + self.potential2[p])
            .collect()
    }
}

pub(crate) fn two_form_norm_sq<T: Real>(geom: &TorusGeometry<T>, f: &GridForm<T>, p: usize) -> T {
    let s2 = geom.kahler_scale() * geom.kahler_scale();
    f.comps.iter().fold(T::zero(), |acc, c| acc + c.pointwise_fro_sq(p)) / s2
}

pub(crate) fn one_form_norm_sq<T: Real>(geom: &TorusGeometry<T>, d: &[Field<T>], p: usize) -> T {
    d.iter().fold(T::zero(), |acc, c| acc + c.pointwise_fro_sq(p)) / geom.kahler_scale()
}

fn check_params<T: Real>(state: &FieldState<T>, params: &ParameterSet) -> Result<()> {
    if state.a1.rank() != params.ranks[0] || state.a2.rank() != params.ranks[1] {
        return Err(Error::ShapeMismatch(format!(
            "state ranks ({}, {}) do not match parameters {:?}",
            state.a1.rank(),
            state.a2.rank(),
            params.ranks
        )));
    }
    Ok(())
}

/// `φφ* - τ I` and `φ*φ + τ′ I` at point `p`.
fn potentials<T: Real>(phi: &SmallMat<T>, tau: T, tau_prime: T) -> (SmallMat<T>, SmallMat<T>) {
    let pp = phi.clone() * phi.adjoint();
    let qq = phi.adjoint() * phi.clone();
    let p = pp - SmallMat::scalar(phi.rows, Complex::new(tau, T::zero()));
    let q = qq + SmallMat::scalar(phi.cols, Complex::new(tau_prime, T::zero()));
    (p, q)
}

pub fn density_terms<T: Real>(geom: &TorusGeometry<T>, state: &FieldState<T>, params: &ParameterSet) -> Result<DensityTerms<T>> {
    check_params(state, params)?;
    let coupled = state.kind == StateKind::Coupled;
    let f1 = curvature(geom, &state.a1);
    let f2 = if coupled { Some(curvature(geom, &state.a2)) } else { None };
    let d = covariant_derivative(geom, &state.a1, &state.a2, &state.phi)?;
    let tau = T::lit(params.tau);
    let tau_prime = T::lit(params.tau_prime);
    let quarter = T::lit(0.25);
    let npts = geom.npts();
    let mut out = DensityTerms {
        curvature1: vec![T::zero(); npts],
        curvature2: vec![T::zero(); npts],
        kinetic: vec![T::zero(); npts],
        potential1: vec![T::zero(); npts],
        potential2: vec![T::zero(); npts],
    };
    for p in 0..npts {
        out.curvature1[p] = two_form_norm_sq(geom, &f1, p);
        if let Some(f2) = &f2 {
            out.curvature2[p] = two_form_norm_sq(geom, f2, p);
        }
        out.kinetic[p] = one_form_norm_sq(geom, &d, p);
        let (pp, qq) = potentials(&state.phi.at(p), tau, tau_prime);
        out.potential1[p] = quarter * pp.fro_sq();
        if coupled {
            out.potential2[p] = quarter * qq.fro_sq();
        }
    }
    Ok(out)
}

/// Pointwise `e_τ`.
pub fn ymh_density<T: Real>(geom: &TorusGeometry<T>, state: &FieldState<T>, params: &ParameterSet) -> Result<Vec<T>> {
    Ok(density_terms(geom, state, params)?.total())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyTerms {
    pub curvature1: f64,
    pub curvature2: f64,
    pub kinetic: f64,
    pub potential1: f64,
    pub potential2: f64,
}

impl EnergyTerms {
    pub fn names() -> [&'static str; 5] {
        ["curvature1", "curvature2", "kinetic", "potential1", "potential2"]
    }

    pub fn values(&self) -> [f64; 5] {
        [self.curvature1, self.curvature2, self.kinetic, self.potential1, self.potential2]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub total: f64,
    pub terms: EnergyTerms,
    pub topological_minimum: f64,
    pub defect: f64,
}

pub fn ymh_energy<T: Real>(geom: &TorusGeometry<T>, state: &FieldState<T>, params: &ParameterSet) -> Result<EnergyReport> {
    let d = density_terms(geom, state, params)?;
    let int = |v: &[T]| geom.integrate(v).as_f64();
    let terms = EnergyTerms {
        curvature1: int(&d.curvature1),
        curvature2: int(&d.curvature2),
        kinetic: int(&d.kinetic),
        potential1: int(&d.potential1),
        potential2: int(&d.potential2),
    };
    let total = geom.integrate(&d.total()).as_f64();
    let topological_minimum = topological_minimum(geom, state, params);
    Ok(EnergyReport { total, terms, topological_minimum, defect: total - topological_minimum })
}

/// `2πτ deg(E) - 8π² Ch₂(E)` for pairs; for triples
/// `2π(τ d₁ + τ′ d₂) - 8π² (Ch₂(E₁) + Ch₂(E₂))`.
pub fn topological_minimum<T: Real>(geom: &TorusGeometry<T>, state: &FieldState<T>, params: &ParameterSet) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let eight_pi2 = 8.0 * std::f64::consts::PI.powi(2);
    let ch1 = background_ch2(geom, &state.a1);
    match state.kind {
        StateKind::Vortex => two_pi * params.tau * params.degrees[0] as f64 - eight_pi2 * ch1,
        StateKind::Coupled => {
            let ch2 = background_ch2(geom, &state.a2);
            two_pi * (params.tau * params.degrees[0] as f64 + params.tau_prime * params.degrees[1] as f64) - eight_pi2 * (ch1 + ch2)
        }
    }
}

/// `(i/2π) ∫ tr ΛF dv`.
pub fn chern_weil_degree<T: Real>(geom: &TorusGeometry<T>, conn: &ConnectionState<T>) -> f64 {
    let lf = geom.contract_lambda(&curvature(geom, conn)).expect("curvature is a 2-form");
    let tr: Vec<T> = (0..geom.npts()).map(|p| -lf.at(p).trace().im).collect();
    geom.integrate(&tr).as_f64() / (2.0 * std::f64::consts::PI)
}

/// `Ch₂ = -(1/8π²) ∫ tr(F∧F)`; zero on curves.
pub fn ch2<T: Real>(geom: &TorusGeometry<T>, conn: &ConnectionState<T>) -> f64 {
    if geom.dim() < 2 {
        return 0.0;
    }
    let f = curvature(geom, conn);
    let c = |a, b| &f.comps[pair_index(4, a, b)];
    let w: Vec<T> = (0..geom.npts())
        .map(|p| {
            let t = (c(0, 1).at(p) * c(2, 3).at(p)).trace() - (c(0, 2).at(p) * c(1, 3).at(p)).trace() + (c(0, 3).at(p) * c(1, 2).at(p)).trace();
            T::lit(2.0) * t.re
        })
        .collect();
    let s2 = geom.kahler_scale() * geom.kahler_scale();
    -(geom.integrate(&w) / s2).as_f64() / (8.0 * std::f64::consts::PI.powi(2))
}

/// `Ch₂` of the constant-curvature background of `conn`.
pub fn background_ch2<T: Real>(geom: &TorusGeometry<T>, conn: &ConnectionState<T>) -> f64 {
    if geom.dim() < 2 {
        return 0.0;
    }
    ch2(geom, &conn.flat_part())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Threshold {
    Solvable,
    Boundary,
    Obstructed,
}

/// Compares the slope `μ(E)` with `τ̂ = τ Vol / 4π`.
pub fn check_threshold<T: Real>(bundle: &BundleSpec, tau: f64, geom: &TorusGeometry<T>) -> Threshold {
    threshold_raw(bundle.slope(), tau, geom.volume().as_f64())
}

pub fn threshold_raw(slope: f64, tau: f64, vol: f64) -> Threshold {
    let tau_hat = tau * vol / FOUR_PI;
    if (tau_hat - slope).abs() <= 1e-12 * slope.abs().max(1.0) {
        Threshold::Boundary
    } else if slope < tau_hat {
        Threshold::Solvable
    } else {
        Threshold::Obstructed
    }
}

/// L² gradient of the functional with respect to `(a₁, a₂, φ)`.
#[derive(Clone, Debug)]
pub struct Gradient<T: Real> {
    pub a1: Vec<Field<T>>,
    pub a2: Vec<Field<T>>,
    pub phi: Field<T>,
}

impl<T: Real> Gradient<T> {
    /// `∫ Σ Re tr(X Y*) dv` over all components.
    pub fn inner(&self, other: &Self, geom: &TorusGeometry<T>) -> T {
        let mut acc = geom.integrate_dot(&self.phi, &other.phi);
        for (x, y) in self.a1.iter().zip(&other.a1).chain(self.a2.iter().zip(&other.a2)) {
            acc = acc + geom.integrate_dot(x, y);
        }
        acc
    }

    pub fn norm(&self, geom: &TorusGeometry<T>) -> T {
        self.inner(self, geom).sqrt()
    }

    pub fn scale(&self, x: T) -> Self {
        Self {
            a1: self.a1.iter().map(|f| f.scale_re(x)).collect(),
            a2: self.a2.iter().map(|f| f.scale_re(x)).collect(),
            phi: self.phi.scale_re(x),
        }
    }

    pub fn zeros_like(state: &FieldState<T>) -> Self {
        let z = |f: &Field<T>| Field::zeros(f.npts, f.rows, f.cols);
        Self { a1: state.a1.a.iter().map(z).collect(), a2: state.a2.a.iter().map(z).collect(), phi: z(&state.phi) }
    }
}

/// `state + t·dir`, moving only the components the functional varies.
pub fn displace<T: Real>(state: &FieldState<T>, dir: &Gradient<T>, t: T) -> FieldState<T> {
    let mut out = state.clone();
    for (a, d) in out.a1.a.iter_mut().zip(&dir.a1) {
        a.axpy(t, d);
    }
    if state.kind == StateKind::Coupled {
        for (a, d) in out.a2.a.iter_mut().zip(&dir.a2) {
            a.axpy(t, d);
        }
    }
    out.phi.axpy(t, &dir.phi);
    out
}

/// Adjoint covariant derivative of an endomorphism-valued field: `∂^{A₀}_μ X + [a_μ, X]`.
fn adjoint_deriv<T: Real>(geom: &TorusGeometry<T>, conn: &ConnectionState<T>, x: &Field<T>, mu: usize) -> Field<T> {
    let mut d = geom.twisted_deriv(x, mu, &conn.end_charges());
    for p in 0..d.npts {
        let v = d.at(p) + conn.a[mu].at(p).commutator(&x.at(p));
        d.set(p, &v);
    }
    d
}

/// `-(2/s²) Σ_μ D_μ F_μν` for each `ν`.
fn curvature_gradient<T: Real>(geom: &TorusGeometry<T>, conn: &ConnectionState<T>, f: &GridForm<T>) -> Vec<Field<T>> {
    let n = geom.real_dim();
    let s2 = geom.kahler_scale() * geom.kahler_scale();
    let r = conn.rank();
    let mut out: Vec<Field<T>> = (0..n).map(|_| Field::zeros(geom.npts(), r, r)).collect();
    for (i, (mu, nu)) in axis_pairs(n).into_iter().enumerate() {
        // F_μν appears in the ν-equation as D_μ F_μν and in the μ-equation as D_ν F_νμ = -D_ν F_μν.
        out[nu].axpy(T::one(), &adjoint_deriv(geom, conn, &f.comps[i], mu));
        out[mu].axpy(-T::one(), &adjoint_deriv(geom, conn, &f.comps[i], nu));
    }
    let c = -T::lit(2.0) / s2;
    out.into_iter().map(|g| g.scale_re(c)).collect()
}

pub fn ymh_gradient<T: Real>(geom: &TorusGeometry<T>, state: &FieldState<T>, params: &ParameterSet) -> Result<Gradient<T>> {
    check_params(state, params)?;
    let coupled = state.kind == StateKind::Coupled;
    let s = geom.kahler_scale();
    let two_over_s = T::lit(2.0) / s;
    let (r1, r2) = (state.a1.rank(), state.a2.rank());
    let f1 = curvature(geom, &state.a1);
    let mut g_a1 = curvature_gradient(geom, &state.a1, &f1);
    let mut g_a2 = if coupled {
        let f2 = curvature(geom, &state.a2);
        curvature_gradient(geom, &state.a2, &f2)
    } else {
        (0..geom.real_dim()).map(|_| Field::zeros(geom.npts(), r2, r2)).collect()
    };
    let d = covariant_derivative(geom, &state.a1, &state.a2, &state.phi)?;
    let mut g_phi = Field::zeros(geom.npts(), r1, r2);
    for (nu, dnu) in d.iter().enumerate() {
        let dd = covariant_derivative(geom, &state.a1, &state.a2, dnu)?;
        g_phi.axpy(-two_over_s, &dd[nu]);
        for p in 0..geom.npts() {
            let ph = state.phi.at(p);
            let dp = dnu.at(p);
            let k1 = (dp.clone() * ph.adjoint()).skew_part().scale_re(two_over_s);
            let v = g_a1[nu].at(p) + k1;
            g_a1[nu].set(p, &v);
            if coupled {
                let k2 = (-(ph.adjoint() * dp)).skew_part().scale_re(two_over_s);
                let v = g_a2[nu].at(p) + k2;
                g_a2[nu].set(p, &v);
            }
        }
    }
    let tau = T::lit(params.tau);
    let tau_prime = T::lit(params.tau_prime);
    for p in 0..geom.npts() {
        let ph = state.phi.at(p);
        let (pp, qq) = potentials(&ph, tau, tau_prime);
        let mut v = g_phi.at(p) + pp * ph.clone();
        if coupled {
            v = v + ph * qq;
        }
        g_phi.set(p, &v);
    }
    Ok(Gradient { a1: g_a1, a2: g_a2, phi: g_phi })
}

/// Sup of the metric norm `|∂̄_A φ| = (Σ_k |c_k|² · 2/s)^{1/2}`.
pub fn dbar_residual<T: Real>(geom: &TorusGeometry<T>, a1: &ConnectionState<T>, a2: &ConnectionState<T>, phi: &Field<T>) -> Result<f64> {
    let d = covariant_derivative(geom, a1, a2, phi)?;
    let db = dbar_from_derivatives(geom, &d);
    let w = T::lit(2.0) / geom.kahler_scale();
    Ok((0..geom.npts())
        .map(|p| (db.comps.iter().fold(T::zero(), |a, c| a + c.pointwise_fro_sq(p)) * w).sqrt())
        .fold(T::zero(), |a, b| a.max(b))
        .as_f64())
}

/// Pointwise `ΛF_A - (i/2) φφ* + (i/2) τ` (or `+ (i/2) φ*φ + (i/2) τ′` with `second`).
pub fn moment_map_field<T: Real>(geom: &TorusGeometry<T>, conn: &ConnectionState<T>, phi: &Field<T>, tau: f64, second: bool) -> Field<T> {
    let lf = geom.contract_lambda(&curvature(geom, conn)).expect("2-form");
    let half_i = Complex::new(T::zero(), T::lit(0.5));
    let r = conn.rank();
    let t = Complex::new(T::lit(tau), T::zero());
    lf.map(r, r, |p, v| {
        let ph = phi.at(p);
        let quad = if second { ph.adjoint() * ph } else { ph.clone() * ph.adjoint() };
        let sgn = if second { half_i } else { -half_i };
        v + quad.scale(sgn) + SmallMat::scalar(r, half_i * t)
    })
}

/// Residual norms of the vortex or coupled-vortex equations, as pointwise sups.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VortexResiduals {
    pub holomorphic: f64,
    pub moment1: f64,
    pub moment2: f64,
    pub integrability: f64,
}

impl VortexResiduals {
    pub fn max(&self) -> f64 {
        self.holomorphic.max(self.moment1).max(self.moment2).max(self.integrability)
    }
}

pub fn vortex_residuals<T: Real>(geom: &TorusGeometry<T>, state: &FieldState<T>, params: &ParameterSet) -> Result<VortexResiduals> {
    check_params(state, params)?;
    let holomorphic = dbar_residual(geom, &state.a1, &state.a2, &state.phi)?;
    let moment1 = moment_map_field(geom, &state.a1, &state.phi, params.tau, false).sup_norm().as_f64();
    let int1 = curvature_02(geom, &curvature(geom, &state.a1)).map_or(0.0, |f| f.sup_norm().as_f64());
    let (moment2, int2) = if state.kind == StateKind::Coupled {
        let m2 = moment_map_field(geom, &state.a2, &state.phi, params.tau_prime, true).sup_norm().as_f64();
        let i2 = curvature_02(geom, &curvature(geom, &state.a2)).map_or(0.0, |f| f.sup_norm().as_f64());
        (m2, i2)
    } else {
        (0.0, 0.0)
    };
    Ok(VortexResiduals { holomorphic, moment1, moment2, integrability: int1.max(int2) })
}
