//! Coupled vortices built from line-bundle vortices.

use num_complex::Complex;

use super::{SolveOptions, VortexSolution};
use crate::error::{Error, Result};
use crate::fields::{BundleSpec, ConnectionState, FieldState, StateKind};
use crate::functional::{derive_parameters, moment_map_field};
use crate::geometry::TorusGeometry;
use crate::grid::Field;
use crate::linalg::SmallMat;
use crate::scalar::Real;

/// Abelian connection `A′` on the trivial line bundle with
/// `ΛF_{A′} + (i/2) φ*φ + (i/2) τ′ = 0`.
///
/// Writing `a′ = Σ_k (-i ∂_{y_k}w dx_k + i ∂_{x_k}w dy_k)` gives `ΛF_{A′} = i Δ_g w`,
/// so one Poisson solve `Δ_g w = -½(|φ|² + τ′)` suffices. The right-hand side must
/// integrate to zero for a degree-0 bundle.
pub fn solve_second_connection<T: Real>(phi: &Field<T>, tau_prime: f64, geom: &TorusGeometry<T>, opts: &SolveOptions) -> Result<ConnectionState<T>> {
    let npts = geom.npts();
    let density: Vec<T> = (0..npts).map(|p| phi.pointwise_fro_sq(p) + T::lit(tau_prime)).collect();
    let total = geom.integrate(&density).as_f64();
    let scale = geom.integrate(&(0..npts).map(|p| phi.pointwise_fro_sq(p)).collect::<Vec<_>>()).as_f64().abs() + tau_prime.abs() * geom.volume().as_f64();
    if total.abs() > 1e-6 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::IncompatibleTopology(total));
    }
    let rhs = Field::from_real(&density.iter().map(|&d| -d / T::lit(2.0)).collect::<Vec<_>>());
    let w = geom.solve_poisson(&rhs);
    let i = Complex::new(T::zero(), T::one());
    let mut a = Vec::with_capacity(geom.real_dim());
    for k in 0..geom.dim() {
        a.push(geom.deriv(&w, 2 * k + 1).scale(-i));
        a.push(geom.deriv(&w, 2 * k).scale(i));
    }
    let a = a.into_iter().map(|f| f.map(1, 1, |_, m| SmallMat::scalar(1, Complex::new(T::zero(), m.get(0, 0).im)))).collect();
    let conn = ConnectionState::background(&BundleSpec::trivial().labeled("L"), geom)?.with_perturbation(a)?;
    let res = moment_map_field(geom, &conn, phi, tau_prime, true).sup_norm().as_f64();
    if !(res <= opts.residual_tol.max(1e-12 * scale)) {
        return Err(Error::ResidualTooLarge { residual: res, tol: opts.residual_tol });
    }
    Ok(conn)
}

/// Turns a line-bundle vortex `(B, ψ)` at parameter `τ_v` into a coupled vortex on
/// `(E ⊗ L, L)` with `L` trivial: `Φ = ψ/√2`, `A₂ = A′`, `A₁ = B ⊗ A′`, at
/// `τ = (τ_v + 4πd/Vol)/2` and `τ′ = (4πd/Vol - τ_v)/2`.
pub fn embed_vortex_as_coupled<T: Real>(vortex: &VortexSolution<T>, geom: &TorusGeometry<T>, opts: &SolveOptions) -> Result<VortexSolution<T>> {
    let st = &vortex.state;
    if st.kind != StateKind::Vortex {
        return Err(Error::InvalidParameter("input is not a vortex pair".into()));
    }
    if st.a1.rank() != 1 {
        return Err(Error::UnsupportedRank(st.a1.rank()));
    }
    let res = vortex.residuals.max();
    if !(res <= opts.acceptance_tol) {
        return Err(Error::ResidualTooLarge { residual: res, tol: opts.acceptance_tol });
    }
    let d = st.a1.bundle.degree;
    let vol = geom.volume().as_f64();
    let cw = 4.0 * std::f64::consts::PI * d as f64 / vol;
    let tau_v = vortex.params.tau;
    let tau = (tau_v + cw) / 2.0;
    let tau_prime = (cw - tau_v) / 2.0;
    let phi = st.phi.scale_re(T::lit(std::f64::consts::FRAC_1_SQRT_2));
    let a2 = solve_second_connection(&phi, tau_prime, geom, opts)?;
    let mut a1 = st.a1.clone();
    for (x, y) in a1.a.iter_mut().zip(&a2.a) {
        x.axpy(T::one(), y);
    }
    let params = derive_parameters(&st.a1.bundle, &a2.bundle, tau, geom)?;
    debug_assert!((params.tau_prime - tau_prime).abs() <= 1e-9 * tau_prime.abs().max(1.0));
    let state = FieldState::coupled(a1, a2, phi)?;
    let sol = VortexSolution::certify(geom, state, params, 0)?;
    if !(sol.residuals.max() <= opts.acceptance_tol) {
        return Err(Error::ResidualTooLarge { residual: sol.residuals.max(), tol: opts.acceptance_tol });
    }
    Ok(sol)
}
