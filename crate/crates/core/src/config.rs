//! Run configuration: one flat JSON object with a schema version.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greedy::{Algorithm, GreedyConfig};
use crate::scm::NeighborRule;
use crate::truth::{
    assemble_problem1, assemble_problem2, load_operator, uniform_grid, AffineOperator,
    TrainSample, XNorm,
};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Problem {
    P1,
    P2,
    #[serde(alias = "external-matrix-file")]
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub problem: Problem,
    /// Required for `external`.
    #[serde(default)]
    pub operator_file: Option<PathBuf>,
    #[serde(default = "defaults::truth_n")]
    pub truth_n: usize,
    /// Per-axis train grid counts; defaults to 129×65 for p1, 65×65 otherwise.
    #[serde(default)]
    pub grid_counts: Option<Vec<usize>>,
    #[serde(default = "defaults::eps")]
    pub eps_betabar: f64,
    #[serde(default = "defaults::eps")]
    pub eps_g: f64,
    /// `null` uses every sample point as a constraint.
    #[serde(default = "defaults::jnb")]
    pub jnb: Option<usize>,
    /// Measure neighbour distance in units of the domain widths.
    #[serde(default)]
    pub normalize_metric: bool,
    #[serde(default)]
    pub phi_constant: f64,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "defaults::max_rounds")]
    pub max_rounds: usize,
    #[serde(default = "defaults::max_points")]
    pub max_points_per_subdomain: usize,
    #[serde(default = "defaults::algorithm")]
    pub algorithm: Algorithm,
    #[serde(default)]
    pub xnorm: XNorm,
    #[serde(default = "defaults::output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub progress: bool,
}

mod defaults {
    use super::*;

    pub fn truth_n() -> usize {
        24
    }
    pub fn eps() -> f64 {
        0.8
    }
    pub fn jnb() -> Option<usize> {
        Some(8)
    }
    pub fn max_rounds() -> usize {
        20
    }
    pub fn max_points() -> usize {
        200
    }
    pub fn algorithm() -> Algorithm {
        Algorithm::Cnnscm
    }
    pub fn output_dir() -> PathBuf {
        PathBuf::from("out")
    }
}

impl RunConfig {
    /// Defaults for a benchmark problem.
    pub fn for_problem(problem: Problem) -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            problem,
            operator_file: None,
            truth_n: defaults::truth_n(),
            grid_counts: None,
            eps_betabar: defaults::eps(),
            eps_g: defaults::eps(),
            jnb: defaults::jnb(),
            normalize_metric: false,
            phi_constant: 0.0,
            seed: None,
            max_rounds: defaults::max_rounds(),
            max_points_per_subdomain: defaults::max_points(),
            algorithm: defaults::algorithm(),
            xnorm: XNorm::Identity,
            output_dir: defaults::output_dir(),
            progress: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config; a relative `operator_file` is resolved
    /// against the config's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::from_json(&fs::read_to_string(path)?)?;
        if let (Some(f), Some(dir)) = (cfg.operator_file.as_mut(), path.parent()) {
            if f.is_relative() {
                *f = dir.join(&*f);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version must be {CONFIG_SCHEMA_VERSION}, got {}",
                self.schema_version
            )));
        }
        if self.truth_n < 4 {
            return Err(Error::Config(format!("truth_n must be >= 4, got {}", self.truth_n)));
        }
        if let Some(g) = &self.grid_counts {
            if g.iter().any(|c| *c < 2) {
                return Err(Error::Config(format!("grid_counts entries must be >= 2, got {g:?}")));
            }
        }
        if self.problem == Problem::External && self.operator_file.is_none() {
            return Err(Error::Config("operator_file is required for problem external".into()));
        }
        self.greedy()?.validate()
    }

    pub fn greedy(&self) -> Result<GreedyConfig> {
        Ok(GreedyConfig {
            eps_betabar: self.eps_betabar,
            eps_g: self.eps_g,
            neighbors: NeighborRule {
                jnb: self.jnb,
                scale: None,
            },
            phi: self.phi_constant,
            max_rounds: self.max_rounds,
            max_points_per_subdomain: self.max_points_per_subdomain,
            seed: self.seed,
            progress: self.progress,
        })
    }

    /// The greedy configuration with the neighbour metric bound to `op`.
    pub fn greedy_for(&self, op: &AffineOperator) -> Result<GreedyConfig> {
        let mut g = self.greedy()?;
        if self.normalize_metric {
            g.neighbors.scale = Some(op.domain().widths());
        }
        Ok(g)
    }

    pub fn operator(&self) -> Result<AffineOperator> {
        match self.problem {
            Problem::P1 => assemble_problem1(self.truth_n, self.xnorm),
            Problem::P2 => assemble_problem2(self.truth_n, self.xnorm),
            Problem::External => {
                let path = self
                    .operator_file
                    .as_ref()
                    .ok_or_else(|| Error::Config("operator_file is required".into()))?;
                load_operator(path)
            }
        }
    }

    pub fn grid_counts_for(&self, op: &AffineOperator) -> Vec<usize> {
        match (&self.grid_counts, self.problem) {
            (Some(g), _) => g.clone(),
            (None, Problem::P1) => vec![129, 65],
            (None, _) => vec![65; op.domain().dim()],
        }
    }

    pub fn train_sample(&self, op: &AffineOperator) -> Result<TrainSample> {
        uniform_grid(op.domain(), &self.grid_counts_for(op))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = RunConfig::from_json(r#"{"schema_version": 1, "problem": "p1"}"#).unwrap();
        assert_eq!(cfg, RunConfig::for_problem(Problem::P1));
        assert_eq!(cfg.jnb, Some(8));
    }

    #[test]
    fn errors_name_the_field() {
        let err = RunConfig::from_json(r#"{"schema_version": 1, "problem": "p1", "eps_g": 1.5}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("eps_g"), "{err}");
        let err = RunConfig::from_json(r#"{"schema_version": 1, "problem": "p2", "truth_n": 2}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("truth_n"), "{err}");
        let err = RunConfig::from_json(r#"{"schema_version": 1, "problem": "p1", "jbn": 3}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("jbn"), "{err}");
        let err = RunConfig::from_json(r#"{"schema_version": 2, "problem": "p1"}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("schema_version"), "{err}");
    }

    #[test]
    fn external_needs_a_file() {
        let err = RunConfig::from_json(r#"{"schema_version": 1, "problem": "external"}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("operator_file"), "{err}");
    }
}
