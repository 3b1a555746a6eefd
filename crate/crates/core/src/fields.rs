//! Hermitian bundles on the torus, unitary connections, Higgs fields and gauge actions.
//!
//! A bundle of rank `r` is realized as a sum of line bundles, summand `j` carrying
//! the Landau background `A₀ = -i·b_{j,k}·x_k·dy_k` on complex axis `k` with
//! `b_{j,k} = 2π n_{j,k} / L_k²` for integer fluxes `n_{j,k}`. A connection is this
//! background plus a skew-hermitian perturbation `a`. Entry `(i, j)` of any
//! endomorphism or homomorphism field is a section of a line bundle whose charge
//! is the difference of the two background fields, see [`TorusGeometry::twisted_deriv`].

use num_complex::Complex;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::TorusGeometry;
use crate::grid::{axis_pairs, Field, FormKind, GridForm};
use crate::linalg::SmallMat;
use crate::scalar::Real;

/// Per-component, per-complex-axis background charges.
pub type Charges<T> = Vec<[T; 2]>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleSpec {
    pub rank: usize,
    pub degree: i64,
    #[serde(default)]
    pub label: String,
    /// Integer flux of each summand through each complex axis; derived when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flux: Option<Vec<Vec<i64>>>,
}

impl BundleSpec {
    pub fn new(rank: usize, degree: i64) -> Self {
        Self { rank, degree, label: String::new(), flux: None }
    }

    pub fn labeled(mut self, label: &str) -> Self {
        self.label = label.to_string();
        self
    }

    pub fn with_flux(mut self, flux: Vec<Vec<i64>>) -> Self {
        self.flux = Some(flux);
        self
    }

    pub fn trivial() -> Self {
        Self::new(1, 0).labeled("trivial")
    }

    pub fn slope(&self) -> f64 {
        self.degree as f64 / self.rank as f64
    }

    fn validate(&self) -> Result<()> {
        if self.rank == 0 || self.rank > crate::linalg::MAX_DIM {
            return Err(Error::UnsupportedRank(self.rank));
        }
        Ok(())
    }

    /// Degree contributed by one unit of flux through complex axis `k`.
    fn unit_degree<T: Real>(geom: &TorusGeometry<T>, k: usize) -> f64 {
        let s = geom.kahler_scale().as_f64();
        let m = geom.dim();
        let others: f64 = (0..m).filter(|&j| j != k).map(|j| geom.periods()[j].as_f64().powi(2)).product();
        s.powi(m as i32 - 1) * others
    }

    /// Integer fluxes `n_{j,k}` realizing this bundle on `geom`.
    ///
    /// Without explicit fluxes the background is taken proportional to `ω`
    /// when that is integral; on curves a non-divisible degree is split as
    /// evenly as possible across summands.
    pub fn resolve_flux<T: Real>(&self, geom: &TorusGeometry<T>) -> Result<Vec<[i64; 2]>> {
        self.validate()?;
        let m = geom.dim();
        let r = self.rank;
        let flux: Vec<[i64; 2]> = match &self.flux {
            Some(f) => {
                if f.len() != r || f.iter().any(|row| row.len() != m) {
                    return Err(Error::InvalidParameter(format!(
                        "bundle '{}': flux must be {r} rows of {m} integers",
                        self.label
                    )));
                }
                f.iter().map(|row| [row[0], if m == 2 { row[1] } else { 0 }]).collect()
            }
            None if m == 1 => {
                let base = self.degree.div_euclid(r as i64);
                let extra = self.degree.rem_euclid(r as i64) as usize;
                (0..r).map(|j| [base + i64::from(j < extra), 0]).collect()
            }
            None => {
                // ω-proportional: b_k = 2π deg s / (m r Vol), n_k = b_k L_k² / 2π.
                let vol = geom.volume().as_f64();
                let s = geom.kahler_scale().as_f64();
                let mut row = [0i64; 2];
                for (k, slot) in row.iter_mut().enumerate().take(m) {
                    let l = geom.periods()[k].as_f64();
                    let n = self.degree as f64 * s * l * l / (m as f64 * r as f64 * vol);
                    if (n - n.round()).abs() > 1e-9 {
                        return Err(Error::NonIntegralFlux { axis: k, value: n });
                    }
                    *slot = n.round() as i64;
                }
                vec![row; r]
            }
        };
        let deg: f64 = flux
            .iter()
            .map(|row| (0..m).map(|k| row[k] as f64 * Self::unit_degree(geom, k)).sum::<f64>())
            .sum();
        if (deg - self.degree as f64).abs() > 1e-9 * (1.0 + deg.abs()) {
            return Err(Error::InvalidParameter(format!(
                "bundle '{}': fluxes give degree {deg}, expected {}",
                self.label, self.degree
            )));
        }
        Ok(flux)
    }
}

/// Unitary connection: Landau background plus a skew-hermitian perturbation.
#[derive(Clone, Debug)]
pub struct ConnectionState<T: Real> {
    pub bundle: BundleSpec,
    pub flux: Vec<[i64; 2]>,
    /// Background field strengths `b_{j,k}`.
    pub b: Vec<[T; 2]>,
    /// Perturbation coefficients `a_μ`, one `r x r` field per real axis.
    pub a: Vec<Field<T>>,
    /// Set when the state is claimed to lie in the integrable locus.
    pub integrable: bool,
}

impl<T: Real> ConnectionState<T> {
    pub fn background(bundle: &BundleSpec, geom: &TorusGeometry<T>) -> Result<Self> {
        let flux = bundle.resolve_flux(geom)?;
        let two_pi = T::lit(2.0) * T::PI();
        let b = flux
            .iter()
            .map(|row| {
                let mut out = [T::zero(); 2];
                for k in 0..geom.dim() {
                    let l = geom.periods()[k];
                    out[k] = two_pi * T::lit(row[k] as f64) / (l * l);
                }
                out
            })
            .collect();
        let r = bundle.rank;
        let a = (0..geom.real_dim()).map(|_| Field::zeros(geom.npts(), r, r)).collect();
        Ok(Self { bundle: bundle.clone(), flux, b, a, integrable: true })
    }

    pub fn rank(&self) -> usize {
        self.bundle.rank
    }

    /// Charges of the entries of an endomorphism field.
    pub fn end_charges(&self) -> Charges<T> {
        hom_charges(&self.b, &self.b)
    }

    /// Background curvature coefficient on complex axis `k`: `F₀_{x_k y_k} = -i·diag(b_{·,k})`.
    pub fn background_curvature(&self, k: usize) -> SmallMat<T> {
        let r = self.rank();
        let mut m = SmallMat::zeros(r, r);
        for j in 0..r {
            m.set(j, j, Complex::new(T::zero(), -self.b[j][k]));
        }
        m
    }

    pub fn with_perturbation(&self, a: Vec<Field<T>>) -> Result<Self> {
        let r = self.rank();
        if a.len() != self.a.len() {
            return Err(Error::ShapeMismatch(format!("expected {} connection components, got {}", self.a.len(), a.len())));
        }
        for f in &a {
            f.check_shape(r, r, self.a[0].npts, "connection perturbation")?;
        }
        let mut out = self.clone();
        out.a = a;
        Ok(out)
    }

    /// Largest pointwise deviation of the perturbation from skew-hermitian.
    pub fn unitarity_defect(&self) -> T {
        let mut worst = T::zero();
        for f in &self.a {
            for p in 0..f.npts {
                let m = f.at(p);
                worst = worst.max((m.clone() + m.adjoint()).fro_sq().sqrt());
            }
        }
        worst
    }
}

/// Charges of the entries of `Hom(E₂, E₁)`: entry `(i, j)` has `b₁_i - b₂_j`.
pub fn hom_charges<T: Real>(b1: &[[T; 2]], b2: &[[T; 2]]) -> Charges<T> {
    let mut out = Vec::with_capacity(b1.len() * b2.len());
    for x in b1 {
        for y in b2 {
            out.push([x[0] - y[0], x[1] - y[1]]);
        }
    }
    out
}

/// Largest `|e^{iβL²} - 1|` over components and axes; zero when every twisting
/// is consistent around a fundamental plaquette.
pub fn cocycle_defect<T: Real>(geom: &TorusGeometry<T>, charges: &[[T; 2]]) -> T {
    let mut worst = T::zero();
    for c in charges {
        for k in 0..geom.dim() {
            let l = geom.periods()[k];
            let z = Complex::from_polar(T::one(), c[k] * l * l) - Complex::new(T::one(), T::zero());
            worst = worst.max(z.norm());
        }
    }
    worst
}

/// Which functional a state is evaluated against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateKind {
    /// `(A, φ)` with `φ ∈ Γ(E)`; the second factor is the trivial line bundle and is inert.
    Vortex,
    /// `(A₁, A₂, φ)` with `φ ∈ Γ(Hom(E₂, E₁))`.
    Coupled,
}

/// A vortex pair or a coupled triple. For pairs, `a2` is the flat trivial line
/// bundle and `phi` is an `r x 1` column.
#[derive(Clone, Debug)]
pub struct FieldState<T: Real> {
    pub kind: StateKind,
    pub a1: ConnectionState<T>,
    pub a2: ConnectionState<T>,
    pub phi: Field<T>,
}

pub type TripleState<T> = FieldState<T>;

/// Higgs field of a state together with the charges of its entries.
pub struct HiggsSection<'a, T: Real> {
    pub values: &'a Field<T>,
    pub charges: Charges<T>,
}

impl<T: Real> FieldState<T> {
    pub fn vortex(a: ConnectionState<T>, phi: Field<T>, geom: &TorusGeometry<T>) -> Result<Self> {
        let a2 = ConnectionState::background(&BundleSpec::trivial(), geom)?;
        Self::new(StateKind::Vortex, a, a2, phi)
    }

    pub fn coupled(a1: ConnectionState<T>, a2: ConnectionState<T>, phi: Field<T>) -> Result<Self> {
        Self::new(StateKind::Coupled, a1, a2, phi)
    }

    fn new(kind: StateKind, a1: ConnectionState<T>, a2: ConnectionState<T>, phi: Field<T>) -> Result<Self> {
        let npts = a1.a[0].npts;
        phi.check_shape(a1.rank(), a2.rank(), npts, "Higgs field")?;
        if a2.a[0].npts != npts {
            return Err(Error::ShapeMismatch("connections live on different grids".into()));
        }
        Ok(Self { kind, a1, a2, phi })
    }

    /// Flat trivial bundles with `φ = 0`.
    pub fn zero(kind: StateKind, e1: &BundleSpec, e2: &BundleSpec, geom: &TorusGeometry<T>) -> Result<Self> {
        let a1 = ConnectionState::background(e1, geom)?;
        let e2 = if kind == StateKind::Vortex { BundleSpec::trivial() } else { e2.clone() };
        let a2 = ConnectionState::background(&e2, geom)?;
        let phi = Field::zeros(geom.npts(), a1.rank(), a2.rank());
        Self::new(kind, a1, a2, phi)
    }

    pub fn phi_charges(&self) -> Charges<T> {
        hom_charges(&self.a1.b, &self.a2.b)
    }

    pub fn higgs(&self) -> HiggsSection<'_, T> {
        HiggsSection { values: &self.phi, charges: self.phi_charges() }
    }

    pub fn with_phi(&self, phi: Field<T>) -> Result<Self> {
        Self::new(self.kind, self.a1.clone(), self.a2.clone(), phi)
    }
}

/// Covariant derivative of an endomorphism field `f` of the bundle of `conn`,
/// background only: `∂_μ f + [A₀_μ, f]`.
pub fn end_background_deriv<T: Real>(geom: &TorusGeometry<T>, conn: &ConnectionState<T>, f: &Field<T>, ax: usize) -> Field<T> {
    geom.twisted_deriv(f, ax, &conn.end_charges())
}

/// `D_μφ = ∂^{A₀}_μ φ + a1_μ φ - φ a2_μ` for every real axis.
pub fn covariant_derivative<T: Real>(
    geom: &TorusGeometry<T>,
    a1: &ConnectionState<T>,
    a2: &ConnectionState<T>,
    phi: &Field<T>,
) -> Result<Vec<Field<T>>> {
    if phi.rows != a1.rank() || phi.cols != a2.rank() {
        return Err(Error::BundleMismatch(format!(
            "section of shape {}x{} on Hom(E₂, E₁) with ranks ({}, {})",
            phi.rows,
            phi.cols,
            a1.rank(),
            a2.rank()
        )));
    }
    let charges = hom_charges(&a1.b, &a2.b);
    Ok((0..geom.real_dim())
        .map(|mu| {
            let mut d = geom.twisted_deriv(phi, mu, &charges);
            let (x, y) = (&a1.a[mu], &a2.a[mu]);
            for p in 0..phi.npts {
                let v = phi.at(p);
                let extra = x.at(p) * v.clone() - v * y.at(p);
                let cur = d.at(p) + extra;
                d.set(p, &cur);
            }
            d
        })
        .collect())
}

/// `∂̄_A φ` with components `½(D_{x_k} + i D_{y_k}) φ`, one per complex axis.
pub fn dbar_a<T: Real>(geom: &TorusGeometry<T>, state: &FieldState<T>) -> Result<GridForm<T>> {
    let d = covariant_derivative(geom, &state.a1, &state.a2, &state.phi)?;
    Ok(dbar_from_derivatives(geom, &d))
}

pub(crate) fn dbar_from_derivatives<T: Real>(geom: &TorusGeometry<T>, d: &[Field<T>]) -> GridForm<T> {
    let half = T::lit(0.5);
    let comps = (0..geom.dim())
        .map(|k| d[2 * k].add(&d[2 * k + 1].scale(Complex::new(T::zero(), T::one()))).scale_re(half))
        .collect();
    GridForm::new(FormKind::ZeroOne, comps)
}

/// Curvature `F = F₀ + d_{A₀}a + a∧a`, one field per axis pair `μ < ν`.
pub fn curvature<T: Real>(geom: &TorusGeometry<T>, conn: &ConnectionState<T>) -> GridForm<T> {
    let n = geom.real_dim();
    let charges = conn.end_charges();
    let derivs: Vec<Vec<Option<Field<T>>>> = (0..n)
        .map(|mu| (0..n).map(|nu| if mu == nu { None } else { Some(geom.twisted_deriv(&conn.a[nu], mu, &charges)) }).collect())
        .collect();
    let comps = axis_pairs(n)
        .into_iter()
        .map(|(mu, nu)| {
            let dmu = derivs[mu][nu].as_ref().expect("off-diagonal");
            let dnu = derivs[nu][mu].as_ref().expect("off-diagonal");
            let mut f = dmu.sub(dnu);
            let bg = if nu == mu + 1 && mu % 2 == 0 { Some(conn.background_curvature(mu / 2)) } else { None };
            for p in 0..f.npts {
                let (x, y) = (conn.a[mu].at(p), conn.a[nu].at(p));
                let mut v = f.at(p) + x.commutator(&y);
                if let Some(b) = &bg {
                    v = v + b.clone();
                }
                f.set(p, &v);
            }
            f
        })
        .collect();
    GridForm::new(FormKind::TwoForm, comps)
}

/// `F^{0,2}` on a complex surface: `¼[F_{x1x2} + i F_{x1y2} + i F_{y1x2} - F_{y1y2}]`.
pub fn curvature_02<T: Real>(geom: &TorusGeometry<T>, f: &GridForm<T>) -> Option<Field<T>> {
    if geom.dim() < 2 {
        return None;
    }
    let n = geom.real_dim();
    let idx = |a, b| crate::grid::pair_index(n, a, b);
    let i = Complex::new(T::zero(), T::one());
    let x1x2 = &f.comps[idx(0, 2)];
    let x1y2 = &f.comps[idx(0, 3)];
    let y1x2 = &f.comps[idx(1, 2)];
    let y1y2 = &f.comps[idx(1, 3)];
    Some(x1x2.add(&x1y2.scale(i)).add(&y1x2.scale(i)).sub(y1y2).scale_re(T::lit(0.25)))
}

/// Sup norm of `F^{0,2}_A`; zero on curves.
pub fn integrability_residual<T: Real>(geom: &TorusGeometry<T>, conn: &ConnectionState<T>) -> T {
    curvature_02(geom, &curvature(geom, conn)).map_or(T::zero(), |f| f.sup_norm())
}

fn check_unitary_gauge<T: Real>(g: &Field<T>, rank: usize, npts: usize) -> Result<()> {
    g.check_shape(rank, rank, npts, "gauge transformation")?;
    let mut worst = T::zero();
    for p in 0..npts {
        worst = worst.max(g.at(p).unitarity_defect());
    }
    if worst > T::lit(1e-10) {
        return Err(Error::NonUnitaryGauge(worst.as_f64()));
    }
    Ok(())
}

/// `g(A)`: perturbation `a ↦ g a g⁻¹ - (d_{A₀} g) g⁻¹`.
pub fn gauge_apply_connection<T: Real>(geom: &TorusGeometry<T>, g: &Field<T>, conn: &ConnectionState<T>) -> Result<ConnectionState<T>> {
    check_unitary_gauge(g, conn.rank(), geom.npts())?;
    let charges = conn.end_charges();
    let a = (0..geom.real_dim())
        .map(|mu| {
            let dg = geom.twisted_deriv(g, mu, &charges);
            let mut out = conn.a[mu].clone();
            for p in 0..out.npts {
                let gp = g.at(p);
                let gi = gp.adjoint();
                let v = gp * conn.a[mu].at(p) * gi.clone() - dg.at(p) * gi;
                out.set(p, &v);
            }
            out
        })
        .collect();
    let mut out = conn.clone();
    out.a = a;
    Ok(out)
}

/// `(g₁(A₁), g₂(A₂), g₁ φ g₂⁻¹)`.
pub fn gauge_apply<T: Real>(geom: &TorusGeometry<T>, g1: &Field<T>, g2: &Field<T>, state: &FieldState<T>) -> Result<FieldState<T>> {
    let a1 = gauge_apply_connection(geom, g1, &state.a1)?;
    let a2 = gauge_apply_connection(geom, g2, &state.a2)?;
    let mut phi = state.phi.clone();
    for p in 0..phi.npts {
        phi.set(p, &(g1.at(p) * state.phi.at(p) * g2.at(p).adjoint()));
    }
    Ok(FieldState { kind: state.kind, a1, a2, phi })
}

/// `(g(A), g φ)` for vortex pairs.
pub fn gauge_apply_vortex<T: Real>(geom: &TorusGeometry<T>, g: &Field<T>, state: &FieldState<T>) -> Result<FieldState<T>> {
    gauge_apply(geom, g, &identity_gauge(geom, state.a2.rank()), state)
}

pub fn identity_gauge<T: Real>(geom: &TorusGeometry<T>, rank: usize) -> Field<T> {
    Field::constant(geom.npts(), SmallMat::identity(rank))
}

/// Constant diagonal phases `diag(e^{iθ_j})`.
pub fn constant_phase_gauge<T: Real>(geom: &TorusGeometry<T>, thetas: &[T]) -> Field<T> {
    let r = thetas.len();
    let mut m = SmallMat::zeros(r, r);
    for (j, &t) in thetas.iter().enumerate() {
        m.set(j, j, Complex::from_polar(T::one(), t));
    }
    Field::constant(geom.npts(), m)
}

/// Parameters of [`random_state`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomSpec {
    pub kind: StateKind,
    pub bundle1: BundleSpec,
    pub bundle2: BundleSpec,
    /// Spectral decay exponent `d`: mode `k` has amplitude `∝ (1 + |k|²)^{-d/2}`.
    pub decay: f64,
    pub connection_amplitude: f64,
    pub higgs_amplitude: f64,
}

impl RandomSpec {
    pub fn vortex(bundle: BundleSpec, decay: f64) -> Self {
        Self { kind: StateKind::Vortex, bundle1: bundle, bundle2: BundleSpec::trivial(), decay, connection_amplitude: 0.5, higgs_amplitude: 1.0 }
    }

    pub fn coupled(e1: BundleSpec, e2: BundleSpec, decay: f64) -> Self {
        Self { kind: StateKind::Coupled, bundle1: e1, bundle2: e2, decay, connection_amplitude: 0.5, higgs_amplitude: 1.0 }
    }
}

fn gaussian<T: Real>(rng: &mut ChaCha8Rng) -> T {
    T::lit(rng.sample::<f64, _>(StandardNormal))
}

/// Random smooth periodic `rows x cols` field with the given spectral decay.
///
/// Only modes with `|j| <= N/4` on every axis are excited, so products of two
/// such fields are still alias-free on the grid.
pub fn random_periodic<T: Real>(geom: &TorusGeometry<T>, rng: &mut ChaCha8Rng, rows: usize, cols: usize, decay: f64, amplitude: f64) -> Field<T> {
    let npts = geom.npts();
    let mut hat = Field::zeros(npts, rows, cols);
    let nc = rows * cols;
    let mut norm_sq = 0.0;
    for p in 0..npts {
        let idx = geom.multi_index(p);
        let mut k2 = 0.0;
        let mut high = false;
        for (ax, &i) in idx.iter().enumerate().take(geom.real_dim()) {
            let n = geom.shape()[ax];
            let j = if i < n / 2 { i as f64 } else { i as f64 - n as f64 };
            high |= j.abs() > (n / 4) as f64;
            k2 += j * j;
        }
        if high {
            continue;
        }
        let w = (1.0 + k2).powf(-decay / 2.0);
        norm_sq += w * w;
        for c in 0..nc {
            let re: T = gaussian(rng);
            let im: T = gaussian(rng);
            hat.data[p * nc + c] = Complex::new(re, im) * T::lit(w);
        }
    }
    // Scale so that the pointwise RMS of each entry is about `amplitude`.
    let scale = amplitude * npts as f64 / (2.0 * norm_sq).sqrt().max(f64::MIN_POSITIVE);
    geom.ifft(&hat).scale_re(T::lit(scale))
}

/// Random smooth section of the line bundle with charge `beta` on each complex axis.
fn random_twisted_line<T: Real>(geom: &TorusGeometry<T>, rng: &mut ChaCha8Rng, beta: [T; 2], decay: f64, amplitude: f64) -> Vec<Complex<T>> {
    let m = geom.dim();
    let npts = geom.npts();
    // Product of one factor per complex axis; each factor is a twisted function of (x_k, y_k).
    let mut values = vec![Complex::new(T::one(), T::zero()); npts];
    for k in 0..m {
        let l = geom.periods()[k].as_f64();
        let b = beta[k].as_f64();
        let nmodes = 4usize;
        let width = l / 5.0;
        let centers: Vec<f64> = (0..2).map(|_| rng.random::<f64>() * l).collect();
        let coeffs: Vec<Vec<(f64, f64)>> = (0..2)
            .map(|_| {
                (0..2 * nmodes + 1)
                    .map(|j| {
                        let kk = j as f64 - nmodes as f64;
                        let w = (1.0 + kk * kk).powf(-decay / 2.0);
                        (w * rng.sample::<f64, _>(StandardNormal), w * rng.sample::<f64, _>(StandardNormal))
                    })
                    .collect()
            })
            .collect();
        let factor = |x: f64, y: f64| -> Complex<f64> {
            let mut acc = Complex::new(0.0, 0.0);
            for n in -3i64..=3 {
                let shift = n as f64 * l;
                let twist = Complex::from_polar(1.0, b * shift * y);
                for (c, cf) in centers.iter().zip(&coeffs) {
                    let dx = x - shift - c;
                    let g = (-dx * dx / (2.0 * width * width)).exp();
                    if g < 1e-300 {
                        continue;
                    }
                    let mut py = Complex::new(0.0, 0.0);
                    for (j, &(re, im)) in cf.iter().enumerate() {
                        let kk = j as f64 - nmodes as f64;
                        py += Complex::new(re, im) * Complex::from_polar(1.0, 2.0 * std::f64::consts::PI * kk * y / l);
                    }
                    acc += twist * g * py;
                }
            }
            acc
        };
        for (p, v) in values.iter_mut().enumerate() {
            let f = factor(geom.coord(p, 2 * k).as_f64(), geom.coord(p, 2 * k + 1).as_f64());
            *v = *v * Complex::new(T::lit(f.re), T::lit(f.im));
        }
    }
    let rms = (values.iter().map(|z| z.norm_sqr().as_f64()).sum::<f64>() / npts as f64).sqrt();
    let s = T::lit(amplitude / rms.max(f64::MIN_POSITIVE));
    values.into_iter().map(|z| z * s).collect()
}

/// Random smooth field whose entry `c` is a section with charge `charges[c]`.
pub fn random_section<T: Real>(geom: &TorusGeometry<T>, rng: &mut ChaCha8Rng, rows: usize, cols: usize, charges: &[[T; 2]], decay: f64, amplitude: f64) -> Field<T> {
    let mut out = Field::zeros(geom.npts(), rows, cols);
    let nc = rows * cols;
    for (c, beta) in charges.iter().enumerate() {
        let vals = if beta.iter().all(|b| *b == T::zero()) {
            random_periodic(geom, rng, 1, 1, decay, amplitude).data
        } else {
            random_twisted_line(geom, rng, *beta, decay, amplitude)
        };
        for (p, v) in vals.into_iter().enumerate() {
            out.data[p * nc + c] = v;
        }
    }
    out
}

/// Random skew-hermitian endomorphism field of the bundle of `conn`.
pub fn random_skew<T: Real>(geom: &TorusGeometry<T>, rng: &mut ChaCha8Rng, conn: &ConnectionState<T>, decay: f64, amplitude: f64) -> Field<T> {
    let r = conn.rank();
    let x = random_section(geom, rng, r, r, &conn.end_charges(), decay, amplitude);
    x.map(r, r, |_, m| (m.clone() - m.adjoint()).scale_re(T::lit(0.5)))
}

/// Random integrable perturbation of `conn`.
///
/// On curves any skew-hermitian perturbation is integrable. On surfaces the
/// `(0,1)` part is `∂̄ξ` for a diagonal periodic `ξ`, which keeps `F^{0,2} = 0`.
pub fn random_perturbation<T: Real>(geom: &TorusGeometry<T>, rng: &mut ChaCha8Rng, conn: &ConnectionState<T>, decay: f64, amplitude: f64) -> Vec<Field<T>> {
    let r = conn.rank();
    if geom.dim() == 1 {
        return (0..2).map(|_| random_skew(geom, rng, conn, decay, amplitude)).collect();
    }
    let mut xi = Field::zeros(geom.npts(), r, r);
    for j in 0..r {
        let d = random_periodic(geom, rng, 1, 1, decay, amplitude);
        for p in 0..geom.npts() {
            xi.data[p * r * r + j * r + j] = d.data[p];
        }
    }
    let i = Complex::new(T::zero(), T::one());
    let mut a = Vec::with_capacity(4);
    for k in 0..2 {
        let c = geom.deriv(&xi, 2 * k).add(&geom.deriv(&xi, 2 * k + 1).scale(i)).scale_re(T::lit(0.5));
        let cs = c.map(r, r, |_, m| m.adjoint());
        a.push(c.sub(&cs));
        a.push(c.add(&cs).scale(-i));
    }
    a
}

/// Unitary gauge `exp(ξ)` for a random smooth skew-hermitian `ξ`.
pub fn random_gauge<T: Real>(geom: &TorusGeometry<T>, conn: &ConnectionState<T>, seed: u64, decay: f64, amplitude: f64) -> Field<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = conn.rank();
    random_skew(geom, &mut rng, conn, decay, amplitude).map(r, r, |_, m| m.expm())
}

/// Reproducible random smooth state.
pub fn random_state<T: Real>(geom: &TorusGeometry<T>, spec: &RandomSpec, seed: u64) -> Result<FieldState<T>> {
    if !(spec.decay > 1.0) {
        return Err(Error::InvalidParameter(format!("spectrum decay {} must exceed 1", spec.decay)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut st = FieldState::zero(spec.kind, &spec.bundle1, &spec.bundle2, geom)?;
    let a1 = random_perturbation(geom, &mut rng, &st.a1, spec.decay, spec.connection_amplitude);
    st.a1 = st.a1.with_perturbation(a1)?;
    if spec.kind == StateKind::Coupled {
        let a2 = random_perturbation(geom, &mut rng, &st.a2, spec.decay, spec.connection_amplitude);
        st.a2 = st.a2.with_perturbation(a2)?;
    }
    let charges = st.phi_charges();
    st.phi = random_section(geom, &mut rng, st.a1.rank(), st.a2.rank(), &charges, spec.decay, spec.higgs_amplitude);
    Ok(st)
}

impl<T: Real> ConnectionState<T> {
    /// Zero perturbation for every axis, keeping the background.
    pub fn flat_part(&self) -> Self {
        let mut out = self.clone();
        for f in &mut out.a {
            f.data.iter_mut().for_each(|z| *z = Complex::zero());
        }
        out
    }
}
