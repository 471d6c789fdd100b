//! Run configuration shared by the command-line driver.

use std::path::PathBuf;

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};

use crate::counterexample::{default_eps, validate_family};
use crate::eigensolve::SolverOptions;
use crate::error::{CdftError, Result};
use crate::grid::{make_grid, Grid2D};
use crate::inversion::FockDarwinSpec;

pub const DEFAULT_N: usize = 257;
pub const DEFAULT_EPS_COUNT: usize = 5;

/// Half extent of the box: explicit, or `8 / sqrt(alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Extent {
    #[default]
    Auto,
    Fixed(f64),
}

impl Serialize for Extent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Extent::Auto => s.serialize_str("auto"),
            Extent::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Extent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(v) => Ok(Extent::Fixed(v)),
            Raw::Text(t) if t == "auto" => Ok(Extent::Auto),
            Raw::Text(t) => Err(de::Error::custom(format!("L must be a number or \"auto\", got \"{t}\""))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(rename = "L", default)]
    pub half_extent: Extent,
}

fn default_n() -> usize {
    DEFAULT_N
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n: DEFAULT_N,
            half_extent: Extent::Auto,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub alpha: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "Btilde", default, skip_serializing_if = "Option::is_none")]
    pub b_tilde: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_list: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolverOptions::default();
        Self {
            tol: d.tol,
            max_iter: d.max_iter,
            seed: d.seed,
        }
    }
}

impl From<SolverConfig> for SolverOptions {
    fn from(c: SolverConfig) -> Self {
        SolverOptions {
            tol: c.tol,
            max_iter: c.max_iter,
            seed: c.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub grid: GridConfig,
    pub family: FamilyConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    /// Parse errors carry the line and column reported by the JSON parser.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CdftError::Config(e.to_string()))
    }

    pub fn half_extent(&self) -> f64 {
        match self.grid.half_extent {
            Extent::Auto => 8.0 / self.family.alpha.sqrt(),
            Extent::Fixed(v) => v,
        }
    }

    pub fn grid(&self) -> Result<Grid2D> {
        if let Extent::Fixed(v) = self.grid.half_extent {
            if !(v.is_finite() && v > 0.0) {
                return Err(CdftError::Config(format!("grid.L must be positive, got {v}")));
            }
        }
        make_grid(self.half_extent(), self.grid.n)
    }

    pub fn solver_options(&self) -> SolverOptions {
        self.solver.into()
    }

    fn validate_common(&self) -> Result<(Grid2D, FockDarwinSpec)> {
        let s = &self.solver;
        if !(s.tol.is_finite() && s.tol > 0.0) {
            return Err(CdftError::Config(format!("solver.tol must be positive, got {}", s.tol)));
        }
        if s.max_iter == 0 {
            return Err(CdftError::Config("solver.max_iter must be at least 1".into()));
        }
        let spec = FockDarwinSpec::new(self.family.alpha, self.family.b).map_err(as_config)?;
        Ok((self.grid()?, spec))
    }

    /// Preconditions of a single ground-state solve.
    pub fn validate_solve(&self) -> Result<(Grid2D, FockDarwinSpec)> {
        self.validate_common()
    }

    /// Preconditions of the counterexample sweep; returns the grid and the eps values.
    pub fn validate_counterexample(&self) -> Result<(Grid2D, Vec<f64>)> {
        let (grid, _) = self.validate_common()?;
        let f = &self.family;
        let b_tilde = f
            .b_tilde
            .ok_or_else(|| CdftError::Config("family.Btilde is required for the counterexample".into()))?;
        validate_family(f.alpha, f.b, b_tilde).map_err(as_config)?;
        let eps_max = 0.5 * (b_tilde - f.b);
        let eps = match (&self.sweep.eps_count, &self.sweep.eps_list) {
            (Some(_), Some(_)) => return Err(CdftError::Config("give sweep.eps_count or sweep.eps_list, not both".into())),
            (_, Some(list)) => list.clone(),
            (Some(0), None) => return Err(CdftError::Config("sweep.eps_count must be at least 1".into())),
            (Some(c), None) => default_eps(eps_max, *c),
            (None, None) => default_eps(eps_max, DEFAULT_EPS_COUNT),
        };
        if eps.is_empty() {
            return Err(CdftError::Config("sweep.eps_list is empty".into()));
        }
        if let Some(bad) = eps.iter().find(|e| !(e.is_finite() && **e >= 0.0 && **e <= eps_max * (1.0 + 1e-12))) {
            return Err(CdftError::Config(format!("eps = {bad} outside [0, {eps_max}]")));
        }
        let mut sorted = eps.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(CdftError::Config("duplicate eps values".into()));
        }
        Ok((grid, eps))
    }
}

fn as_config(e: CdftError) -> CdftError {
    match e {
        CdftError::InvalidInput(m) => CdftError::Config(m),
        other => other,
    }
}
