//! Vortex and coupled-vortex solvers.

mod abelian;
mod coulomb;
mod coupled;
mod flow;

pub use abelian::{holomorphic_section, solve_abelian_vortex, ZeroData};
pub use coulomb::{coulomb_divergence, coulomb_project, CoulombResult};
pub use coupled::{embed_vortex_as_coupled, solve_second_connection};
pub use flow::{gradient_flow, FlowResult, FlowStatus};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::FieldState;
use crate::functional::{vortex_residuals, ymh_energy, EnergyReport, ParameterSet, VortexResiduals};
use crate::geometry::TorusGeometry;
use crate::grid::Field;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    pub residual_tol: f64,
    pub max_iters: usize,
    /// Sufficient-decrease constant of the backtracking line search.
    pub armijo: f64,
    pub max_backtracks: usize,
    /// Consecutive failed decreases tolerated before declaring divergence.
    pub max_failures: usize,
    /// Largest admissible `sup|u|` of the conformal factor.
    pub amplitude_ceiling: f64,
    /// Smallest admissible mean weight of the Newton linearization.
    pub conditioning_floor: f64,
    pub cg_tol: f64,
    pub cg_max_iters: usize,
    /// Tolerance on the input when an operation requires a solution as input.
    pub acceptance_tol: f64,
    /// Attempt the solve even when the threshold test says no solution exists.
    pub force: bool,
    /// Upper bound on `sup|a|` for the nonabelian Coulomb iteration.
    pub coulomb_smallness: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            residual_tol: 1e-10,
            max_iters: 200,
            armijo: 1e-4,
            max_backtracks: 40,
            max_failures: 5,
            amplitude_ceiling: 50.0,
            conditioning_floor: 1e-10,
            cg_tol: 1e-13,
            cg_max_iters: 4000,
            acceptance_tol: 1e-8,
            force: false,
            coulomb_smallness: 1.0,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.residual_tol > 0.0) {
            return Err(Error::InvalidParameter(format!("residual_tol {} must be positive", self.residual_tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

/// Energy versus topological minimum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub energy: EnergyReport,
    pub relative_gap: f64,
    pub passed: bool,
}

impl Certificate {
    pub fn new(energy: EnergyReport) -> Self {
        // Falls back to an absolute gap when the minimum is small (e.g. degree 0).
        let scale = energy.topological_minimum.abs().max(1.0);
        let relative_gap = energy.defect / scale;
        let passed = energy.defect >= -1e-9 && energy.defect <= 1e-5 * scale;
        Self { energy, relative_gap, passed }
    }
}

#[derive(Clone, Debug)]
pub struct VortexSolution<T: Real> {
    pub state: FieldState<T>,
    pub params: ParameterSet,
    pub residuals: VortexResiduals,
    pub iterations: usize,
    pub certificate: Certificate,
}

impl<T: Real> VortexSolution<T> {
    /// Re-evaluates residuals and energy with the independent evaluators.
    pub fn certify(geom: &TorusGeometry<T>, state: FieldState<T>, params: ParameterSet, iterations: usize) -> Result<Self> {
        let residuals = vortex_residuals(geom, &state, &params)?;
        let certificate = Certificate::new(ymh_energy(geom, &state, &params)?);
        Ok(Self { state, params, residuals, iterations, certificate })
    }
}

/// Preconditioned conjugate gradients for a Hermitian positive definite operator.
/// Returns the solution, the iteration count and the final relative residual.
pub(crate) fn pcg<T: Real>(
    apply: impl Fn(&Field<T>) -> Field<T>,
    precond: impl Fn(&Field<T>) -> Field<T>,
    b: &Field<T>,
    x0: Field<T>,
    tol: T,
    max_iters: usize,
) -> (Field<T>, usize, T) {
    let bnorm = b.dot(b).sqrt();
    if bnorm == T::zero() {
        return (Field::zeros(b.npts, b.rows, b.cols), 0, T::zero());
    }
    let mut x = x0;
    let mut r = b.sub(&apply(&x));
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    let mut rel = r.dot(&r).sqrt() / bnorm;
    let mut it = 0;
    while it < max_iters && rel > tol {
        let ap = apply(&p);
        let pap = p.dot(&ap);
        if !(pap > T::zero()) {
            break;
        }
        let alpha = rz / pap;
        x.axpy(alpha, &p);
        r.axpy(-alpha, &ap);
        rel = r.dot(&r).sqrt() / bnorm;
        it += 1;
        if rel <= tol {
            break;
        }
        z = precond(&r);
        let rz_new = r.dot(&z);
        let beta = rz_new / rz;
        rz = rz_new;
        p = z.add(&p.scale_re(beta));
    }
    (x, it, rel)
}
