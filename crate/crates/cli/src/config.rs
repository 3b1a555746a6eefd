//! Experiment configuration: one JSON file per run.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vortexlab_core::fields::BundleSpec;
use vortexlab_core::geometry::GeometryConfig;
use vortexlab_core::solvers::SolveOptions;

use crate::error::{CliError, CliResult};

pub const EXPERIMENTS: [&str; 9] = [
    "solve-vortex",
    "solve-coupled",
    "embed-coupled",
    "check-dimred",
    "tau-sweep",
    "density-profile",
    "concentration",
    "stability",
    "el-residual",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauRange {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
    /// Read `start` and `stop` as multiples of 4π.
    #[serde(default)]
    pub four_pi_units: bool,
}

impl TauRange {
    pub fn values(&self) -> Vec<f64> {
        let unit = if self.four_pi_units { 4.0 * PI } else { 1.0 };
        if self.steps == 1 {
            return vec![self.start * unit];
        }
        (0..self.steps)
            .map(|j| (self.start + (self.stop - self.start) * j as f64 / (self.steps - 1) as f64) * unit)
            .collect()
    }
}

/// Synthetic concentrating family: `background + Σ_j bump(centers[j], λ, masses[j])` for each λ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub centers: Vec<Vec<f64>>,
    pub masses: Vec<f64>,
    pub widths: Vec<f64>,
    #[serde(default)]
    pub background: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub summands: Vec<i64>,
    pub phi_support: Vec<usize>,
    /// Defaults to the geometry volume, or 1 without a geometry.
    pub vol: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub output: PathBuf,
    #[serde(default)]
    pub seed: u64,
    pub geometry: Option<GeometryConfig>,
    pub bundle: Option<BundleSpec>,
    pub bundle2: Option<BundleSpec>,
    pub tau: Option<f64>,
    pub tau_range: Option<TauRange>,
    #[serde(default)]
    pub solver: SolveOptions,
    /// Number of random triples for `check-dimred`.
    pub samples: Option<usize>,
    /// `hym` or `vortex` for `density-profile`.
    pub source: Option<String>,
    pub center: Option<Vec<f64>>,
    pub radii: Option<Vec<f64>>,
    pub family: Option<FamilySpec>,
    pub epsilon: Option<f64>,
    pub r_schedule: Option<Vec<f64>>,
    /// Reference energy for the energy-identity audit.
    pub e_tau: Option<f64>,
    pub model: Option<ModelSpec>,
    /// Run the solver next to each stability verdict.
    #[serde(default)]
    pub solver_check: bool,
    /// Grid sizes for the convergence study of `el-residual`.
    pub grids: Option<Vec<usize>>,
}

fn missing(field: &str, experiment: &str) -> CliError {
    CliError::config(format!("field `{field}` is required for experiment `{experiment}`"))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        let ex = self.experiment.as_str();
        if !EXPERIMENTS.contains(&ex) {
            return Err(CliError::config(format!("field `experiment`: unknown experiment `{ex}` (expected one of {})", EXPERIMENTS.join(", "))));
        }
        self.solver.validate().map_err(|e| CliError::config(format!("field `solver`: {e}")))?;
        let need_geometry = ex != "stability";
        if need_geometry && self.geometry.is_none() {
            return Err(missing("geometry", ex));
        }
        match ex {
            "solve-vortex" | "embed-coupled" | "el-residual" | "solve-coupled" | "check-dimred" => {
                self.bundle()?;
                self.tau_value()?;
            }
            "tau-sweep" => {
                self.bundle()?;
                self.tau_list()?;
            }
            "density-profile" => {
                self.bundle()?;
                self.radii.as_ref().ok_or_else(|| missing("radii", ex))?;
                match self.source.as_deref() {
                    None | Some("hym") => {}
                    Some("vortex") => {
                        self.tau_value()?;
                    }
                    Some(other) => return Err(CliError::config(format!("field `source`: expected `hym` or `vortex`, got `{other}`"))),
                }
            }
            "concentration" => {
                let fam = self.family.as_ref().ok_or_else(|| missing("family", ex))?;
                if fam.centers.len() != fam.masses.len() || fam.widths.is_empty() {
                    return Err(CliError::config("field `family`: one mass per center and at least one width are required"));
                }
                self.epsilon.ok_or_else(|| missing("epsilon", ex))?;
                self.r_schedule.as_ref().ok_or_else(|| missing("r_schedule", ex))?;
            }
            "stability" => {
                self.model.as_ref().ok_or_else(|| missing("model", ex))?;
                if self.tau.is_none() && self.tau_range.is_none() {
                    return Err(missing("tau` or `tau_range", ex));
                }
                if self.solver_check && self.geometry.is_none() {
                    return Err(missing("geometry", "stability with solver_check"));
                }
            }
            _ => unreachable!(),
        }
        if let Some(r) = &self.tau_range {
            if r.steps == 0 {
                return Err(CliError::config("field `tau_range.steps` must be positive"));
            }
        }
        if let Some(g) = &self.grids {
            if g.is_empty() {
                return Err(CliError::config("field `grids` must be nonempty"));
            }
        }
        Ok(())
    }

    pub fn geometry(&self) -> CliResult<&GeometryConfig> {
        self.geometry.as_ref().ok_or_else(|| missing("geometry", &self.experiment))
    }

    pub fn bundle(&self) -> CliResult<&BundleSpec> {
        self.bundle.as_ref().ok_or_else(|| missing("bundle", &self.experiment))
    }

    pub fn bundle2(&self) -> BundleSpec {
        self.bundle2.clone().unwrap_or_else(BundleSpec::trivial)
    }

    pub fn tau_value(&self) -> CliResult<f64> {
        let t = self.tau.ok_or_else(|| missing("tau", &self.experiment))?;
        if !t.is_finite() {
            return Err(CliError::config("field `tau` must be finite"));
        }
        Ok(t)
    }

    pub fn tau_list(&self) -> CliResult<Vec<f64>> {
        match (&self.tau_range, self.tau) {
            (Some(r), _) => Ok(r.values()),
            (None, Some(t)) => Ok(vec![t]),
            (None, None) => Err(missing("tau_range", &self.experiment)),
        }
    }
}
