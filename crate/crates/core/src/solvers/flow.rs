//! Preconditioned L-BFGS descent on the Yang-Mills-Higgs functional.

use std::collections::VecDeque;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{SolveOptions, VortexSolution};
use crate::error::{Error, Result};
use crate::fields::{FieldState, StateKind};
use crate::functional::{displace, ymh_energy, ymh_gradient, Gradient, ParameterSet};
use crate::geometry::TorusGeometry;
use crate::grid::Field;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlowStatus {
    Converged,
    MaxIters,
    Diverged,
}

#[derive(Clone, Debug)]
pub struct FlowResult<T: Real> {
    pub status: FlowStatus,
    /// Best state reached, with its certificate.
    pub solution: VortexSolution<T>,
    /// Energy after each accepted step, starting with the initial energy.
    pub energy_trace: Vec<f64>,
    pub gradient_norm: f64,
}

impl<T: Real> FlowResult<T> {
    pub fn into_result(self) -> Result<VortexSolution<T>> {
        match self.status {
            FlowStatus::Converged => Ok(self.solution),
            FlowStatus::MaxIters => Err(Error::MaxIters(self.solution.iterations)),
            FlowStatus::Diverged => Err(Error::Diverged { iterations: self.solution.iterations, reason: "line search stalled".into() }),
        }
    }
}

/// `(μ - Δ)⁻¹ μ` on untwisted entries, identity on twisted ones.
fn precondition_field<T: Real>(geom: &TorusGeometry<T>, f: &Field<T>, charges: &[[T; 2]], mu: T) -> Field<T> {
    let s = geom.kahler_scale();
    let smooth = geom.apply_symbol(f, |k| {
        let k2 = k.iter().fold(T::zero(), |a, &x| a + x * x);
        Complex::new(mu / (mu + k2 / s), T::zero())
    });
    let nc = f.ncomp();
    let mut out = f.clone();
    for (c, ch) in charges.iter().enumerate() {
        if ch.iter().all(|b| *b == T::zero()) {
            for p in 0..f.npts {
                out.data[p * nc + c] = smooth.data[p * nc + c];
            }
        }
    }
    out
}

/// The shift `μ = max(1, τ/2)` follows the mass of the linearized potential.
fn precondition<T: Real>(geom: &TorusGeometry<T>, state: &FieldState<T>, g: &Gradient<T>, mu: T) -> Gradient<T> {
    let c1 = state.a1.end_charges();
    let c2 = state.a2.end_charges();
    let cp = state.phi_charges();
    Gradient {
        a1: g.a1.iter().map(|f| precondition_field(geom, f, &c1, mu)).collect(),
        a2: g.a2.iter().map(|f| precondition_field(geom, f, &c2, mu)).collect(),
        phi: precondition_field(geom, &g.phi, &cp, mu),
    }
}

fn axpy<T: Real>(y: &mut Gradient<T>, t: T, x: &Gradient<T>) {
    for (a, b) in y.a1.iter_mut().zip(&x.a1).chain(y.a2.iter_mut().zip(&x.a2)) {
        a.axpy(t, b);
    }
    y.phi.axpy(t, &x.phi);
}

fn difference<T: Real>(x: &Gradient<T>, y: &Gradient<T>) -> Gradient<T> {
    let mut out = x.clone();
    axpy(&mut out, -T::one(), y);
    out
}

/// Gradient restricted to the components the functional varies: connection
/// parts are projected onto skew-hermitian fields and Nyquist modes removed.
/// Spectral derivatives vanish on Nyquist modes, and letting those grow drives
/// the discrete energy below the topological bound.
fn masked_gradient<T: Real>(geom: &TorusGeometry<T>, state: &FieldState<T>, params: &ParameterSet) -> Result<Gradient<T>> {
    let mut g = ymh_gradient(geom, state, params)?;
    let (c1, c2) = (state.a1.end_charges(), state.a2.end_charges());
    for (f, ch) in g.a1.iter_mut().map(|f| (f, &c1)).chain(g.a2.iter_mut().map(|f| (f, &c2))) {
        let (r, c) = (f.rows, f.cols);
        *f = geom.band_limit(f, ch, 1.0).map(r, c, |_, m| m.skew_part());
    }
    g.phi = geom.band_limit(&g.phi, &state.phi_charges(), 1.0);
    if state.kind == StateKind::Vortex {
        for f in &mut g.a2 {
            *f = f.scale_re(T::zero());
        }
    }
    Ok(g)
}

const MEMORY: usize = 8;

/// Two-loop recursion with the preconditioner as the initial inverse Hessian.
fn lbfgs_direction<T: Real>(
    geom: &TorusGeometry<T>,
    state: &FieldState<T>,
    g: &Gradient<T>,
    pairs: &VecDeque<(Gradient<T>, Gradient<T>, T)>,
    mu: T,
) -> Gradient<T> {
    let mut q = g.clone();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let a = *rho * s.inner(&q, geom);
        axpy(&mut q, -a, y);
        alphas.push(a);
    }
    let mut r = precondition(geom, state, &q, mu);
    if let Some((s, y, _)) = pairs.back() {
        let py = precondition(geom, state, y, mu);
        let gamma = s.inner(y, geom) / y.inner(&py, geom);
        r = r.scale(gamma);
    }
    for ((s, y, rho), a) in pairs.iter().zip(alphas.into_iter().rev()) {
        let b = *rho * y.inner(&r, geom);
        axpy(&mut r, a - b, s);
    }
    r
}

/// Minimizes the energy from `state0` by preconditioned L-BFGS with an Armijo
/// backtracking line search; the memory is dropped whenever a step fails.
///
/// Stops when the L² gradient norm drops below `residual_tol · max(1, E)`.
pub fn gradient_flow<T: Real>(geom: &TorusGeometry<T>, state0: FieldState<T>, params: &ParameterSet, opts: &SolveOptions) -> Result<FlowResult<T>> {
    opts.validate()?;
    let mut state = state0;
    let mut energy = ymh_energy(geom, &state, params)?.total;
    let mut trace = vec![energy];
    let mut pairs: VecDeque<(Gradient<T>, Gradient<T>, T)> = VecDeque::new();
    let mut failures = 0usize;
    let mut iterations = 0usize;
    let mut status = FlowStatus::MaxIters;
    let mut g = masked_gradient(geom, &state, params)?;
    let mut gnorm;
    let mut first_step = T::lit(0.1);
    let mu = T::lit((params.tau / 2.0).max(1.0));
    loop {
        gnorm = g.norm(geom);
        if gnorm <= T::lit(opts.residual_tol * energy.abs().max(1.0)) {
            status = FlowStatus::Converged;
            break;
        }
        if iterations >= opts.max_iters {
            break;
        }
        let mut dir = lbfgs_direction(geom, &state, &g, &pairs, mu);
        let mut slope = g.inner(&dir, geom).as_f64();
        if !(slope > 0.0) {
            pairs.clear();
            dir = precondition(geom, &state, &g, mu);
            slope = g.inner(&dir, geom).as_f64();
        }
        let mut t = if pairs.is_empty() { first_step } else { T::one() };
        let mut accepted = None;
        for _ in 0..=opts.max_backtracks {
            let trial = displace(&state, &dir, -t);
            let e = ymh_energy(geom, &trial, params)?.total;
            if e.is_finite() && e <= energy - opts.armijo * t.as_f64() * slope {
                accepted = Some((trial, e));
                break;
            }
            t = t / T::lit(2.0);
        }
        iterations += 1;
        match accepted {
            Some((next, e)) => {
                let g_next = masked_gradient(geom, &next, params)?;
                let s = dir.scale(-t);
                let y = difference(&g_next, &g);
                let sy = s.inner(&y, geom);
                if sy > T::zero() {
                    if pairs.len() == MEMORY {
                        pairs.pop_front();
                    }
                    pairs.push_back((s, y, T::one() / sy));
                }
                if pairs.is_empty() {
                    first_step = t * T::lit(2.0);
                }
                state = next;
                energy = e;
                g = g_next;
                trace.push(e);
                failures = 0;
            }
            None => {
                pairs.clear();
                first_step = t;
                failures += 1;
                if failures >= opts.max_failures {
                    status = FlowStatus::Diverged;
                    break;
                }
            }
        }
    }
    let solution = VortexSolution::certify(geom, state, params.clone(), iterations)?;
    Ok(FlowResult { status, solution, energy_trace: trace, gradient_norm: gnorm.as_f64() })
}

