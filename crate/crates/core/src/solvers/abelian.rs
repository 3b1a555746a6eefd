//! Line-bundle vortices through the complex gauge `h = h₀ e^{2u}`.
//!
//! With `φ = e^u φ₀` for a holomorphic `φ₀` and
//! `a = Σ_k (-i ∂_{y_k}u dx_k + i ∂_{x_k}u dy_k)`, the pair stays holomorphic and
//! `ΛF = ΛF₀ + i Δ_g u`, so the vortex equation becomes
//! `Δ_g u = ½|φ₀|² e^{2u} - c` with `c = τ/2 - Σ_k b_k/s`.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{pcg, SolveOptions, VortexSolution};
use crate::error::{Error, Result};
use crate::fields::{random_section, BundleSpec, ConnectionState, FieldState};
use crate::functional::{check_threshold, ParameterSet, Threshold};
use crate::geometry::TorusGeometry;
use crate::grid::Field;
use crate::linalg::SmallMat;
use crate::scalar::Real;

/// Reference holomorphic section used as the zero data of the vortex.
#[derive(Clone, Debug)]
pub enum ZeroData<T: Real> {
    /// Constant section for degree 0, kernel element of `∂̄_{A₀}` otherwise.
    Auto,
    Constant,
    Section(Field<T>),
}

/// Largest per-direction resolution on which the kernel iteration runs.
pub const KERNEL_GRID: usize = 32;

fn real_part<T: Real>(f: &Field<T>) -> Field<T> {
    let mut out = f.clone();
    out.data.iter_mut().for_each(|z| z.im = T::zero());
    out
}

fn shifted_inverse_laplacian<T: Real>(geom: &TorusGeometry<T>, f: &Field<T>, shift: T) -> Field<T> {
    let s = geom.kahler_scale();
    geom.apply_symbol(f, |k| {
        let k2 = k.iter().fold(T::zero(), |a, &x| a + x * x);
        Complex::new(T::one() / (k2 / s + shift), T::zero())
    })
}

/// Unit-sup element of `ker ∂̄_{A₀}` on a line bundle of positive degree,
/// by inverse iteration on `K = Σ_k -(D_{x_k} - i D_{y_k})(D_{x_k} + i D_{y_k})`.
///
/// The iteration runs on a grid of at most [`KERNEL_GRID`] points per direction and
/// the result is spectrally refined onto `geom`.
pub fn holomorphic_section<T: Real>(geom: &TorusGeometry<T>, conn: &ConnectionState<T>, seed: u64, opts: &SolveOptions) -> Result<Field<T>> {
    let grid = geom.config().grid.clone();
    if grid.iter().any(|&n| n > KERNEL_GRID) {
        let coarse_grid: Vec<usize> = grid.iter().map(|&n| n.min(KERNEL_GRID)).collect();
        let coarse = TorusGeometry::build(geom.periods(), &coarse_grid, geom.kahler_scale())?;
        let coarse_conn = ConnectionState::background(&conn.bundle, &coarse)?;
        let psi = holomorphic_section(&coarse, &coarse_conn, seed, opts)?;
        return geom.refine(&coarse, &psi, &[conn.b[0]]);
    }
    if conn.rank() != 1 {
        return Err(Error::UnsupportedRank(conn.rank()));
    }
    if conn.bundle.degree <= 0 || conn.flux[0].iter().any(|&n| n < 0) {
        return Err(Error::HypothesisUnmet(format!("degree {} bundle has no nonconstant holomorphic sections here", conn.bundle.degree)));
    }
    let charges = vec![conn.b[0]];
    let i = Complex::new(T::zero(), T::one());
    let apply_k = |psi: &Field<T>| -> Field<T> {
        let mut out = Field::zeros(psi.npts, 1, 1);
        for k in 0..geom.dim() {
            let bpsi = geom.twisted_deriv(psi, 2 * k, &charges).add(&geom.twisted_deriv(psi, 2 * k + 1, &charges).scale(i));
            let back = geom.twisted_deriv(&bpsi, 2 * k, &charges).sub(&geom.twisted_deriv(&bpsi, 2 * k + 1, &charges).scale(i));
            out.axpy(-T::one(), &back);
        }
        out
    };
    let bmin = conn.b[0].iter().take(geom.dim()).filter(|b| **b > T::zero()).fold(T::infinity(), |a, &b| a.min(b));
    let delta = bmin * T::lit(0.05);
    let s = geom.kahler_scale();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut psi = random_section(geom, &mut rng, 1, 1, &charges, 4.0, 1.0);
    let target = T::lit(opts.cg_tol.max(1e-13)).sqrt() * T::lit(1e-4);
    for _ in 0..60 {
        let shifted = |x: &Field<T>| {
            let mut y = apply_k(x);
            y.axpy(delta, x);
            y
        };
        let pre = |x: &Field<T>| shifted_inverse_laplacian(geom, x, delta / s).scale_re(T::one() / s);
        let (next, _, _) = pcg(shifted, pre, &psi, psi.clone(), T::lit(opts.cg_tol), opts.cg_max_iters);
        let nrm = next.dot(&next).sqrt();
        psi = next.scale_re(T::one() / nrm);
        let kp = apply_k(&psi);
        if kp.dot(&kp).sqrt() < target * bmin {
            break;
        }
    }
    let sup = psi.sup_norm();
    Ok(psi.scale_re(T::one() / sup))
}

/// Solves the vortex equation on a line bundle by Newton iteration in the conformal factor.
///
/// The returned state has residuals at most `residual_tol · max(1, τ)`.
pub fn solve_abelian_vortex<T: Real>(
    bundle: &BundleSpec,
    zero_data: ZeroData<T>,
    tau: f64,
    geom: &TorusGeometry<T>,
    opts: &SolveOptions,
) -> Result<VortexSolution<T>> {
    opts.validate()?;
    if bundle.rank != 1 {
        return Err(Error::UnsupportedRank(bundle.rank));
    }
    let threshold = check_threshold(bundle, tau, geom);
    if threshold != Threshold::Solvable && !opts.force {
        return Err(Error::ThresholdViolated { tau, slope: bundle.slope(), tau_hat: tau * geom.volume().as_f64() / (4.0 * std::f64::consts::PI) });
    }
    let conn = ConnectionState::background(bundle, geom)?;
    let phi0 = match zero_data {
        ZeroData::Constant => Field::constant(geom.npts(), SmallMat::scalar(1, Complex::new(T::one(), T::zero()))),
        ZeroData::Auto if bundle.degree == 0 && conn.flux[0].iter().all(|&n| n == 0) => {
            Field::constant(geom.npts(), SmallMat::scalar(1, Complex::new(T::one(), T::zero())))
        }
        ZeroData::Auto => holomorphic_section(geom, &conn, 0, opts)?,
        ZeroData::Section(f) => {
            f.check_shape(1, 1, geom.npts(), "zero data")?;
            f
        }
    };
    let npts = geom.npts();
    let s = geom.kahler_scale();
    let b_sum = (0..geom.dim()).fold(T::zero(), |a, k| a + conn.b[0][k]) / s;
    let c = T::lit(tau) / T::lit(2.0) - b_sum;
    let w: Vec<T> = (0..npts).map(|p| phi0.scalar_at(p).norm_sqr() / T::lit(2.0)).collect();
    let wmean = geom.integrate(&w) / geom.volume();
    if !(wmean > T::zero()) {
        return Err(Error::SingularLinearization("zero data vanishes identically".into()));
    }
    let residual = |u: &Field<T>| -> Field<T> {
        let lap = geom.laplacian(u);
        let mut g = Field::zeros(npts, 1, 1);
        for p in 0..npts {
            let up = u.data[p].re;
            g.data[p] = Complex::new(-lap.data[p].re + w[p] * (up + up).exp() - c, T::zero());
        }
        g
    };
    let l2 = |f: &Field<T>| f.dot(f).sqrt();
    let u0 = if c > T::zero() { (c / wmean).ln() / T::lit(2.0) } else { T::zero() };
    let mut u = Field::constant(npts, SmallMat::scalar(1, Complex::new(u0, T::zero())));
    let tol = T::lit(opts.residual_tol);
    let mut g = residual(&u);
    let mut failures = 0usize;
    let mut iterations = 0usize;
    loop {
        let gsup = g.sup_norm();
        if gsup <= tol * T::lit(0.1) {
            break;
        }
        if iterations >= opts.max_iters {
            return Err(Error::Diverged { iterations, reason: format!("max_iters reached with residual {}", gsup.as_f64()) });
        }
        let usup = u.sup_norm();
        if usup > T::lit(opts.amplitude_ceiling) {
            return Err(Error::Diverged { iterations, reason: format!("conformal factor amplitude {} above ceiling", usup.as_f64()) });
        }
        let weight: Vec<T> = (0..npts).map(|p| T::lit(2.0) * w[p] * (u.data[p].re + u.data[p].re).exp()).collect();
        let wbar = geom.integrate(&weight) / geom.volume();
        if !(wbar > T::lit(opts.conditioning_floor)) {
            return Err(Error::Diverged { iterations, reason: format!("linearization weight {} below conditioning floor", wbar.as_f64()) });
        }
        let jac = |v: &Field<T>| -> Field<T> {
            let mut out = geom.laplacian(v).scale_re(-T::one());
            for p in 0..npts {
                out.data[p] = out.data[p] + v.data[p] * weight[p];
            }
            out
        };
        let pre = |r: &Field<T>| shifted_inverse_laplacian(geom, r, wbar);
        let rhs = g.scale_re(-T::one());
        let (v, _, rel) = pcg(jac, pre, &rhs, Field::zeros(npts, 1, 1), T::lit(opts.cg_tol), opts.cg_max_iters);
        if !rel.is_finite() {
            return Err(Error::SingularLinearization("non-finite Newton step".into()));
        }
        let v = real_part(&v);
        let g0 = l2(&g);
        let mut t = T::one();
        let mut accepted = None;
        for _ in 0..=opts.max_backtracks {
            let mut trial = u.clone();
            trial.axpy(t, &v);
            let gt = residual(&trial);
            let gn = l2(&gt);
            if gn.is_finite() && gn <= (T::one() - T::lit(opts.armijo) * t) * g0 {
                accepted = Some((trial, gt));
                break;
            }
            t = t / T::lit(2.0);
        }
        iterations += 1;
        match accepted {
            Some((nu, ng)) => {
                u = nu;
                g = ng;
                failures = 0;
            }
            None => {
                if gsup <= tol {
                    break;
                }
                failures += 1;
                if failures >= opts.max_failures {
                    return Err(Error::Diverged { iterations, reason: format!("{failures} consecutive failed decreases") });
                }
                u.axpy(t, &v);
                g = residual(&u);
            }
        }
    }
    let state = vortex_from_conformal_factor(geom, &conn, &phi0, &u)?;
    let params = ParameterSet::vortex(bundle, tau, geom);
    let sol = VortexSolution::certify(geom, state, params, iterations)?;
    let worst = sol.residuals.max();
    let tol = opts.residual_tol * tau.abs().max(1.0);
    if !(worst <= tol) {
        return Err(Error::ResidualTooLarge { residual: worst, tol });
    }
    Ok(sol)
}

/// `(A₀ + a_u, e^u φ₀)` for the conformal factor `u`.
pub(crate) fn vortex_from_conformal_factor<T: Real>(geom: &TorusGeometry<T>, conn: &ConnectionState<T>, phi0: &Field<T>, u: &Field<T>) -> Result<FieldState<T>> {
    let i = Complex::new(T::zero(), T::one());
    let mut a = Vec::with_capacity(geom.real_dim());
    for k in 0..geom.dim() {
        a.push(geom.deriv(u, 2 * k + 1).scale(-i));
        a.push(geom.deriv(u, 2 * k).scale(i));
    }
    let a = a.into_iter().map(|f| f.map(1, 1, |_, m| SmallMat::scalar(1, Complex::new(T::zero(), m.get(0, 0).im)))).collect();
    let conn = conn.with_perturbation(a)?;
    let phi = phi0.map(1, 1, |p, m| m.scale_re(u.data[p].re.exp()));
    FieldState::vortex(conn, phi, geom)
}
