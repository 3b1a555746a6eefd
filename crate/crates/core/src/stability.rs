//! Slopes, τ-stability of pairs and triples on split models, and wall sets.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::BundleSpec;
use crate::geometry::TorusGeometry;
use crate::scalar::Real;
use crate::solvers::{solve_abelian_vortex, SolveOptions, ZeroData};

/// Equality tolerance for slope comparisons.
pub const WALL_TOL: f64 = 1e-12;
const MAX_SUMMANDS: usize = 20;

/// `ℰ = ⊕ L_i` with the section supported on `phi_support`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitModel {
    pub summands: Vec<i64>,
    pub phi_support: Vec<usize>,
    pub vol: f64,
}

impl SplitModel {
    pub fn new(summands: Vec<i64>, phi_support: Vec<usize>, vol: f64) -> Result<Self> {
        let m = Self { summands, phi_support, vol };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.summands.is_empty() {
            return Err(Error::EmptySubobject);
        }
        if self.summands.len() > MAX_SUMMANDS {
            return Err(Error::InvalidParameter(format!("at most {MAX_SUMMANDS} summands are enumerated")));
        }
        if let Some(&i) = self.phi_support.iter().find(|&&i| i >= self.summands.len()) {
            return Err(Error::InvalidParameter(format!("support index {i} is out of range")));
        }
        if !(self.vol > 0.0) {
            return Err(Error::InvalidParameter(format!("volume must be positive, got {}", self.vol)));
        }
        Ok(())
    }

    pub fn rank(&self) -> usize {
        self.summands.len()
    }

    pub fn tau_hat(&self, tau: f64) -> f64 {
        tau * self.vol / (4.0 * PI)
    }

    fn support_mask(&self) -> u32 {
        self.phi_support.iter().fold(0, |m, &i| m | (1 << i))
    }

    fn subset(&self, mask: u32) -> Vec<i64> {
        (0..self.rank()).filter(|i| mask & (1 << i) != 0).map(|i| self.summands[i]).collect()
    }
}

pub fn slope(degrees: &[i64]) -> Result<f64> {
    if degrees.is_empty() {
        return Err(Error::EmptySubobject);
    }
    Ok(degrees.iter().sum::<i64>() as f64 / degrees.len() as f64)
}

pub fn bundle_slope(spec: &BundleSpec) -> Result<f64> {
    if spec.rank == 0 {
        return Err(Error::EmptySubobject);
    }
    Ok(spec.slope())
}

/// Which defining condition a witness violates or meets with equality.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    /// `μ(ℰ′) < τ̂`.
    Subobject,
    /// `μ(ℰ/ℰ′) > τ̂` for `φ ∈ H⁰(ℰ′)`.
    Quotient,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    Stable,
    /// `witness` lists the summand indices of `ℰ′`.
    Unstable { witness: Vec<usize>, condition: Condition },
    Wall { witness: Vec<usize>, condition: Condition },
}

impl Verdict {
    pub fn is_stable(&self) -> bool {
        matches!(self, Verdict::Stable)
    }
    pub fn is_wall(&self) -> bool {
        matches!(self, Verdict::Wall { .. })
    }
}

fn indices(mask: u32, n: usize) -> Vec<usize> {
    (0..n).filter(|i| mask & (1 << i) != 0).collect()
}

/// Strict violations win over equalities; the first equality found is reported as the wall.
pub fn pair_is_stable(model: &SplitModel, tau: f64) -> Result<Verdict> {
    model.validate()?;
    let n = model.rank();
    let th = model.tau_hat(tau);
    let full: u32 = (1u32 << n) - 1;
    let support = model.support_mask();
    let mut wall = None;
    for mask in 1..=full {
        let mu = slope(&model.subset(mask))?;
        if mu > th + WALL_TOL {
            return Ok(Verdict::Unstable { witness: indices(mask, n), condition: Condition::Subobject });
        }
        if (mu - th).abs() <= WALL_TOL && wall.is_none() {
            wall = Some((mask, Condition::Subobject));
        }
        if mask != full && mask & support == support {
            let q = slope(&model.subset(full & !mask))?;
            if q < th - WALL_TOL {
                return Ok(Verdict::Unstable { witness: indices(mask, n), condition: Condition::Quotient });
            }
            if (q - th).abs() <= WALL_TOL && wall.is_none() {
                wall = Some((mask, Condition::Quotient));
            }
        }
    }
    Ok(match wall {
        Some((mask, condition)) => Verdict::Wall { witness: indices(mask, n), condition },
        None => Verdict::Stable,
    })
}

/// Stability of `(ℰ₁, L₂, φ)` through the pair `(ℰ₁ ⊗ L₂*, φ)`.
pub fn triple_is_stable(model1: &SplitModel, line_degree2: i64, rank2: usize, tau: f64) -> Result<Verdict> {
    if rank2 != 1 {
        return Err(Error::RankTwoSecondFactor(rank2));
    }
    let shifted = SplitModel { summands: model1.summands.iter().map(|d| d - line_degree2).collect(), ..model1.clone() };
    pair_is_stable(&shifted, tau)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WallSet {
    pub walls: Vec<f64>,
    /// `(d′, r′)` per wall, in lowest terms.
    pub provenance: Vec<(i64, usize)>,
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn wall_set(mut slopes: Vec<(i64, usize)>, vol: f64) -> WallSet {
    for s in &mut slopes {
        let g = gcd(s.0, s.1 as i64).max(1);
        *s = (s.0 / g, s.1 / g as usize);
    }
    slopes.sort_by(|a, b| (a.0 * b.1 as i64).cmp(&(b.0 * a.1 as i64)));
    slopes.dedup();
    WallSet { walls: slopes.iter().map(|&(d, r)| 4.0 * PI * d as f64 / (r as f64 * vol)).collect(), provenance: slopes }
}

/// Walls of a split model: slopes of all nonempty sub-sums.
pub fn tau_walls(model: &SplitModel) -> Result<WallSet> {
    model.validate()?;
    let n = model.rank();
    let slopes = (1..(1u32 << n)).map(|mask| (model.subset(mask).iter().sum::<i64>(), mask.count_ones() as usize)).collect();
    Ok(wall_set(slopes, model.vol))
}

/// Walls from sub-degree and sub-rank bounds: all `4π d′/(r′ Vol)`.
pub fn tau_walls_bounded(max_rank: usize, degrees: std::ops::RangeInclusive<i64>, vol: f64) -> WallSet {
    let slopes = (1..=max_rank).flat_map(|r| degrees.clone().map(move |d| (d, r))).collect();
    wall_set(slopes, vol)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmokeReport {
    pub tau: f64,
    pub tau_hat: f64,
    pub verdict: Verdict,
    pub solver_converged: bool,
    pub solver_message: Option<String>,
    /// Both implications hold (or the case is a wall, where nothing is asserted).
    pub consistent: bool,
}

/// Runs the solver on the analytic realization of `model` and compares with the verdict.
///
/// Rank-one models use the abelian vortex solver. Split rank-two models with
/// one-summand support realize as a vortex on that summand plus a
/// constant-curvature connection on the other, which solves the equations iff
/// the other summand's degree equals `τ̂`.
pub fn correspondence_smoke_test<T: Real>(model: &SplitModel, tau: f64, geom: &TorusGeometry<T>, opts: &SolveOptions) -> Result<SmokeReport> {
    model.validate()?;
    if geom.dim() != 1 {
        return Err(Error::UnsupportedDimension(geom.dim()));
    }
    let vol = geom.volume().as_f64();
    if (vol - model.vol).abs() > 1e-12 * vol {
        return Err(Error::InvalidParameter(format!("model volume {} does not match geometry volume {vol}", model.vol)));
    }
    let verdict = pair_is_stable(model, tau)?;
    let th = model.tau_hat(tau);
    let (vortex_summand, rest): (usize, Vec<usize>) = match (model.rank(), model.phi_support.as_slice()) {
        (1, [0]) => (0, vec![]),
        (2, [i]) => (*i, vec![1 - *i]),
        _ => return Err(Error::InvalidParameter("realizable models are rank one, or rank two with one-summand support".into())),
    };
    let forced = SolveOptions { force: true, ..opts.clone() };
    let bundle = BundleSpec::new(1, model.summands[vortex_summand]);
    let (mut converged, mut message) = match solve_abelian_vortex(&bundle, ZeroData::Auto, tau, geom, &forced) {
        Ok(_) => (true, None),
        Err(e) => (false, Some(e.to_string())),
    };
    for &j in &rest {
        if (model.summands[j] as f64 - th).abs() > WALL_TOL {
            converged = false;
            message.get_or_insert_with(|| format!("summand {j} of degree {} admits no constant-curvature solution at tau_hat {th}", model.summands[j]));
        }
    }
    let consistent = verdict.is_wall() || (converged == verdict.is_stable());
    Ok(SmokeReport { tau, tau_hat: th, verdict, solver_converged: converged, solver_message: message, consistent })
}
