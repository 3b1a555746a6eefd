//! The SU(2)-invariant connection on `M × P¹` built from a triple, and the
//! identities relating its Yang-Mills energy and HYM condition to the triple.
//!
//! Everything is expressed in orthonormal coframes: `e^μ = √s dx^μ` on `M` and
//! `(e¹, e²)` on `P¹` for the metric `σ ω_P`, so `ω_P = σ⁻¹ e¹∧e²`. The fixed
//! form `α = (e¹ - i e²)/2` has `|α|² = ½`. The blocks are
//!
//! ```text
//! F_A = | F₁ - (i/2)σ φφ* ω_P           dφ ∧ α                       |
//!       | -(dφ ∧ α)*                     F₂ + (i/2)σ φ*φ ω_P - 4πi ω_P |
//! ```

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{covariant_derivative, curvature, FieldState, StateKind};
use crate::functional::{vortex_residuals, ymh_density, ymh_energy, ParameterSet, VortexResiduals};
use crate::geometry::TorusGeometry;
use crate::grid::{pair_index, Field};
use crate::linalg::SmallMat;
use crate::scalar::Real;

/// Block curvature of the reduced connection, one `(r₁+r₂)²` matrix per
/// orthonormal 2-plane.
#[derive(Clone, Debug)]
pub struct ReducedCurvature<T: Real> {
    pub ranks: [usize; 2],
    /// Planes `e^μ ∧ e^ν` of `M`, `μ < ν`.
    pub base: Vec<Field<T>>,
    /// The fiber plane `e¹ ∧ e²`.
    pub fiber: Field<T>,
    /// Mixed planes `e^μ ∧ e^a`, indexed `[μ][a]`.
    pub mixed: Vec<[Field<T>; 2]>,
}

fn embed_block<T: Real>(out: &mut SmallMatBig<T>, m: &SmallMat<T>, row0: usize, col0: usize) {
    for i in 0..m.rows {
        for j in 0..m.cols {
            out.set(row0 + i, col0 + j, m.get(i, j));
        }
    }
}

/// Dense square matrix of size up to 2·MAX_DIM, used only for block assembly.
#[derive(Clone, Debug)]
struct SmallMatBig<T> {
    n: usize,
    d: Vec<Complex<T>>,
}

impl<T: Real> SmallMatBig<T> {
    fn zeros(n: usize) -> Self {
        Self { n, d: vec![Complex::new(T::zero(), T::zero()); n * n] }
    }
    fn set(&mut self, i: usize, j: usize, z: Complex<T>) {
        self.d[i * self.n + j] = z;
    }
}

fn write_big<T: Real>(f: &mut Field<T>, p: usize, m: &SmallMatBig<T>) {
    let nc = m.n * m.n;
    f.data[p * nc..(p + 1) * nc].copy_from_slice(&m.d);
}

fn coupled_sigma(params: &ParameterSet) -> Result<f64> {
    match (params.kind, params.sigma) {
        (StateKind::Coupled, Some(s)) => Ok(s),
        _ => Err(Error::InvalidParameter("dimensional reduction needs coupled parameters".into())),
    }
}

pub fn assemble_reduced_curvature<T: Real>(geom: &TorusGeometry<T>, state: &FieldState<T>, params: &ParameterSet) -> Result<ReducedCurvature<T>> {
    if state.kind != StateKind::Coupled {
        return Err(Error::ShapeMismatch("reduction is defined for coupled triples".into()));
    }
    let sigma = T::lit(coupled_sigma(params)?);
    let (r1, r2) = (state.a1.rank(), state.a2.rank());
    if [r1, r2] != params.ranks {
        return Err(Error::ShapeMismatch(format!("triple ranks ({r1}, {r2}) against parameters {:?}", params.ranks)));
    }
    let n = r1 + r2;
    let npts = geom.npts();
    let s = geom.kahler_scale();
    let f1 = curvature(geom, &state.a1);
    let f2 = curvature(geom, &state.a2);
    let d = covariant_derivative(geom, &state.a1, &state.a2, &state.phi)?;
    let i = Complex::new(T::zero(), T::one());
    let half_i = i * T::lit(0.5);

    let base = (0..f1.comps.len())
        .map(|c| {
            let mut out = Field::zeros(npts, n, n);
            for p in 0..npts {
                let mut m = SmallMatBig::zeros(n);
                embed_block(&mut m, &f1.comps[c].at(p).scale_re(T::one() / s), 0, 0);
                embed_block(&mut m, &f2.comps[c].at(p).scale_re(T::one() / s), r1, r1);
                write_big(&mut out, p, &m);
            }
            out
        })
        .collect();

    let four_pi_i = i * T::lit(4.0) * T::PI();
    let mut fiber = Field::zeros(npts, n, n);
    for p in 0..npts {
        let ph = state.phi.at(p);
        let x11 = (ph.clone() * ph.adjoint()).scale(-half_i * sigma);
        let x22 = (ph.adjoint() * ph).scale(half_i * sigma) - SmallMat::scalar(r2, four_pi_i);
        let mut m = SmallMatBig::zeros(n);
        embed_block(&mut m, &x11.scale_re(T::one() / sigma), 0, 0);
        embed_block(&mut m, &x22.scale_re(T::one() / sigma), r1, r1);
        write_big(&mut fiber, p, &m);
    }

    let alpha = [Complex::new(T::lit(0.5), T::zero()), Complex::new(T::zero(), -T::lit(0.5))];
    let rs = T::one() / s.sqrt();
    let mixed = d
        .iter()
        .map(|dmu| {
            let make = |a: usize| {
                let mut out = Field::zeros(npts, n, n);
                for p in 0..npts {
                    let u = dmu.at(p).scale(alpha[a] * rs);
                    let mut m = SmallMatBig::zeros(n);
                    embed_block(&mut m, &u, 0, r1);
                    embed_block(&mut m, &u.adjoint().scale_re(-T::one()), r1, 0);
                    write_big(&mut out, p, &m);
                }
                out
            };
            [make(0), make(1)]
        })
        .collect();
    Ok(ReducedCurvature { ranks: [r1, r2], base, fiber, mixed })
}

impl<T: Real> ReducedCurvature<T> {
    /// `|F_A|²_σ` at point `p`.
    pub fn norm_sq(&self, p: usize) -> T {
        let mut acc = self.fiber.pointwise_fro_sq(p);
        for f in &self.base {
            acc = acc + f.pointwise_fro_sq(p);
        }
        for [x, y] in &self.mixed {
            acc = acc + x.pointwise_fro_sq(p) + y.pointwise_fro_sq(p);
        }
        acc
    }

    /// Largest deviation from skew-hermitian over all planes.
    pub fn skew_defect(&self) -> T {
        let mut worst = T::zero();
        let all = self.base.iter().chain(std::iter::once(&self.fiber)).chain(self.mixed.iter().flat_map(|m| m.iter()));
        for f in all {
            for p in 0..f.npts {
                let m = f.at_big(p);
                for a in 0..m.0 {
                    for b in 0..m.0 {
                        worst = worst.max((m.1[a * m.0 + b] + m.1[b * m.0 + a].conj()).norm());
                    }
                }
            }
        }
        worst
    }
}

trait AtBig<T> {
    fn at_big(&self, p: usize) -> (usize, Vec<Complex<T>>);
}

impl<T: Real> AtBig<T> for Field<T> {
    fn at_big(&self, p: usize) -> (usize, Vec<Complex<T>>) {
        let nc = self.ncomp();
        (self.rows, self.data[p * nc..(p + 1) * nc].to_vec())
    }
}

/// `max_p | |F_A|²_σ - e_τ - c(τ) |`.
pub fn verify_density_identity<T: Real>(geom: &TorusGeometry<T>, state: &FieldState<T>, params: &ParameterSet) -> Result<f64> {
    let red = assemble_reduced_curvature(geom, state, params)?;
    let e = ymh_density(geom, state, params)?;
    let c = T::lit(params.c_tau.expect("coupled parameters"));
    Ok((0..geom.npts()).map(|p| (red.norm_sq(p) - e[p] - c).mag()).fold(T::zero(), |a, b| a.max(b)).as_f64())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegralIdentity {
    /// `YM_σ(A) = σ ∫_M |F_A|²_σ dv`.
    pub lhs: f64,
    /// `σ YMH_τ + C(τ)`.
    pub rhs: f64,
    pub gap: f64,
}

pub fn verify_integral_identity<T: Real>(geom: &TorusGeometry<T>, state: &FieldState<T>, params: &ParameterSet) -> Result<IntegralIdentity> {
    let red = assemble_reduced_curvature(geom, state, params)?;
    let sigma = coupled_sigma(params)?;
    let lhs = sigma * geom.integrate_fn(|p| red.norm_sq(p)).as_f64();
    let rhs = sigma * ymh_energy(geom, state, params)?.total + params.big_c_tau.expect("coupled parameters");
    let gap = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
    Ok(IntegralIdentity { lhs, rhs, gap: if lhs == rhs { 0.0 } else { gap } })
}

/// HYM residuals of the reduced connection, `λ = -(i/2)τ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HymResiduals {
    /// `ΛF_A - λI` on the `E₁` block.
    pub block1: f64,
    /// `ΛF_A - λI` on the `E₂` block.
    pub block2: f64,
    /// `F^{0,2}` of the off-diagonal blocks.
    pub mixed: f64,
    /// `F^{0,2}` of the diagonal blocks along `M`.
    pub integrability: f64,
}

impl HymResiduals {
    pub fn max(&self) -> f64 {
        self.block1.max(self.block2).max(self.mixed).max(self.integrability)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HymEquivalence {
    pub hym_residuals: HymResiduals,
    pub vortex_residuals: VortexResiduals,
    /// Smallest `C` with `hym ≤ C · vortex` and `vortex ≤ C · hym`, componentwise.
    pub constant: f64,
}

fn sup_block<T: Real>(f: &Field<T>, npts: usize, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> T {
    let n = f.rows;
    let mut worst = T::zero();
    for p in 0..npts {
        let mut acc = T::zero();
        for i in rows.clone() {
            for j in cols.clone() {
                acc = acc + f.data[p * n * n + i * n + j].norm_sqr();
            }
        }
        worst = worst.max(acc.sqrt());
    }
    worst
}

pub fn hym_residuals<T: Real>(geom: &TorusGeometry<T>, red: &ReducedCurvature<T>, params: &ParameterSet) -> HymResiduals {
    let [r1, r2] = red.ranks;
    let n = r1 + r2;
    let npts = geom.npts();
    let m = geom.dim();
    let lambda = Complex::new(T::zero(), -T::lit(0.5 * params.tau));
    let mut lam = red.fiber.clone();
    for k in 0..m {
        lam.axpy(T::one(), &red.base[pair_index(2 * m, 2 * k, 2 * k + 1)]);
    }
    for p in 0..npts {
        for j in 0..n {
            let idx = p * n * n + j * n + j;
            lam.data[idx] = lam.data[idx] - lambda;
        }
    }
    let block1 = sup_block(&lam, npts, 0..r1, 0..n).max(sup_block(&lam, npts, r1..n, 0..r1)).as_f64();
    let block2 = sup_block(&lam, npts, r1..n, r1..n).as_f64();

    // (0,2) part of a plane pair (x, y) × (x', y'): ¼[F(x,x') + iF(x,y') + iF(y,x') - F(y,y')].
    let i = Complex::new(T::zero(), T::one());
    let q = T::lit(0.25);
    let combine = |a: &Field<T>, b: &Field<T>, c: &Field<T>, d: &Field<T>| a.add(&b.scale(i)).add(&c.scale(i)).sub(d).scale_re(q);
    let mut mixed = T::zero();
    for k in 0..m {
        let (x, y) = (&red.mixed[2 * k], &red.mixed[2 * k + 1]);
        let f02 = combine(&x[0], &x[1], &y[0], &y[1]);
        mixed = mixed.max(f02.sup_norm());
    }
    let mut integrability = T::zero();
    if m == 2 {
        let pi = |a, b| &red.base[pair_index(4, a, b)];
        let f02 = combine(pi(0, 2), pi(0, 3), pi(1, 2), pi(1, 3));
        integrability = f02.sup_norm();
    }
    HymResiduals { block1, block2, mixed: mixed.as_f64(), integrability: integrability.as_f64() }
}

pub fn hym_equivalence_check<T: Real>(geom: &TorusGeometry<T>, state: &FieldState<T>, params: &ParameterSet) -> Result<HymEquivalence> {
    let red = assemble_reduced_curvature(geom, state, params)?;
    let hym = hym_residuals(geom, &red, params);
    let vortex = vortex_residuals(geom, state, params)?;
    let pairs = [
        (hym.block1, vortex.moment1),
        (hym.block2, vortex.moment2),
        (hym.mixed, vortex.holomorphic),
        (hym.integrability, vortex.integrability),
    ];
    let tiny = 1e-14;
    let constant = pairs
        .iter()
        .map(|&(h, v)| if h.max(v) <= tiny { 1.0 } else { (h.max(tiny) / v.max(tiny)).max(v.max(tiny) / h.max(tiny)) })
        .fold(1.0, f64::max);
    Ok(HymEquivalence { hym_residuals: hym, vortex_residuals: vortex, constant })
}

/// Report emitted by the `check-dimred` experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimredReport {
    pub max_pointwise_residual: f64,
    pub integral_gap: f64,
    pub hym_residuals: HymResiduals,
    pub vortex_residuals: VortexResiduals,
}

pub fn dimred_report<T: Real>(geom: &TorusGeometry<T>, state: &FieldState<T>, params: &ParameterSet) -> Result<DimredReport> {
    let eq = hym_equivalence_check(geom, state, params)?;
    Ok(DimredReport {
        max_pointwise_residual: verify_density_identity(geom, state, params)?,
        integral_gap: verify_integral_identity(geom, state, params)?.gap,
        hym_residuals: eq.hym_residuals,
        vortex_residuals: eq.vortex_residuals,
    })
}
