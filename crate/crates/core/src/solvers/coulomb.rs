//! Coulomb gauge `d*a = 0` for connection perturbations.

use num_complex::Complex;

use super::SolveOptions;
use crate::error::{Error, Result};
use crate::fields::{gauge_apply_connection, ConnectionState};
use crate::geometry::TorusGeometry;
use crate::grid::Field;
use crate::linalg::SmallMat;
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct CoulombResult<T: Real> {
    pub connection: ConnectionState<T>,
    /// Gauge transformation taking the input to the output.
    pub gauge: Field<T>,
    pub divergence: f64,
    pub iterations: usize,
}

/// `Σ_μ ∂_μ a_μ`; the metric codifferential is `-1/s` times this.
fn divergence<T: Real>(geom: &TorusGeometry<T>, a: &[Field<T>]) -> Field<T> {
    let mut out = Field::zeros(a[0].npts, a[0].rows, a[0].cols);
    for (mu, f) in a.iter().enumerate() {
        out.axpy(T::one(), &geom.deriv(f, mu));
    }
    out
}

/// Sup norm of `d*a`.
pub fn coulomb_divergence<T: Real>(geom: &TorusGeometry<T>, conn: &ConnectionState<T>) -> f64 {
    (divergence(geom, &conn.a).sup_norm() / geom.kahler_scale()).as_f64()
}

fn euclidean_inverse_laplacian<T: Real>(geom: &TorusGeometry<T>, f: &Field<T>) -> Field<T> {
    geom.apply_symbol(f, |k| {
        let k2 = k.iter().fold(T::zero(), |a, &x| a + x * x);
        if k2 == T::zero() {
            Complex::new(T::zero(), T::zero())
        } else {
            Complex::new(-T::one() / k2, T::zero())
        }
    })
}

/// Gauge-transforms the perturbation into Coulomb gauge.
///
/// Rank one is the exact Hodge projection removing the exact part. Higher rank
/// iterates `ξ = Δ⁻¹(∂·a)`, `a ↦ e^ξ(a)` and needs a small, untwisted perturbation.
pub fn coulomb_project<T: Real>(geom: &TorusGeometry<T>, conn: &ConnectionState<T>, opts: &SolveOptions) -> Result<CoulombResult<T>> {
    let r = conn.rank();
    let npts = geom.npts();
    if r == 1 {
        let xi = euclidean_inverse_laplacian(geom, &divergence(geom, &conn.a));
        let xi = xi.map(1, 1, |_, m| SmallMat::scalar(1, Complex::new(T::zero(), m.get(0, 0).im)));
        let a: Vec<Field<T>> = conn.a.iter().enumerate().map(|(mu, f)| f.sub(&geom.deriv(&xi, mu))).collect();
        let gauge = xi.map(1, 1, |_, m| m.expm());
        let connection = conn.with_perturbation(a)?;
        let divergence = coulomb_divergence(geom, &connection);
        return Ok(CoulombResult { connection, gauge, divergence, iterations: 1 });
    }
    if conn.end_charges().iter().any(|c| c.iter().any(|b| *b != T::zero())) {
        return Err(Error::InvalidParameter("nonabelian Coulomb gauge needs an untwisted endomorphism bundle".into()));
    }
    let size = conn.a.iter().fold(T::zero(), |acc, f| acc.max(f.sup_norm())).as_f64();
    if size > opts.coulomb_smallness {
        return Err(Error::FieldTooLarge(size));
    }
    let mut cur = conn.clone();
    let mut gauge = Field::constant(npts, SmallMat::identity(r));
    let mut prev = f64::INFINITY;
    for it in 1..=opts.max_iters {
        let div = divergence(geom, &cur.a);
        let dnorm = coulomb_divergence(geom, &cur);
        if dnorm <= opts.residual_tol {
            return Ok(CoulombResult { connection: cur, gauge, divergence: dnorm, iterations: it - 1 });
        }
        if dnorm >= prev {
            return Err(Error::FieldTooLarge(size));
        }
        prev = dnorm;
        let xi = euclidean_inverse_laplacian(geom, &div).map(r, r, |_, m| m.skew_part());
        let g = xi.map(r, r, |_, m| m.expm());
        cur = gauge_apply_connection(geom, &g, &cur)?;
        gauge = g.map(r, r, |p, m| m * gauge.at(p));
    }
    Err(Error::MaxIters(opts.max_iters))
}
