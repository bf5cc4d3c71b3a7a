//! Declarative Monte Carlo study description, read from TOML.
//!
//! ```toml
//! family = "logistic"
//! n = [50, 100, 200]
//! replicates = 500
//! seed = 7
//! gamma_star = [0.5, -0.5]
//!
//! [beta]
//! rule = "uniform"
//! bound = 1.0
//!
//! [covariates]
//! rule = "iid_pm1"
//! p = 2
//! ```
//!
//! Optional keys: `noise_free` (default false), `[dependence]` (default
//! `kind = "independent"`) and `[solver]` overriding [`SolverConfig`] fields.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::edge_models::EdgeFamily;
use crate::error::{Error, Result};
use crate::estimator::SolverConfig;
use crate::simulator::{BetaRule, CovariateRule, Dependence, GenSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub family: EdgeFamily,
    pub n: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub gamma_star: Vec<f64>,
    pub beta: BetaRule,
    pub covariates: CovariateRule,
    #[serde(default)]
    pub dependence: Dependence,
    #[serde(default)]
    pub noise_free: bool,
    #[serde(default)]
    pub solver: SolverConfig,
}

impl StudyConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: StudyConfig = toml::from_str(text).map_err(|e| Error::Config(format!("study config: {e}")))?;
        cfg.grid()?;
        cfg.solver.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// One generator spec per grid size, all under the study seed.
    pub fn grid(&self) -> Result<Vec<GenSpec>> {
        if self.n.is_empty() {
            return Err(Error::Config("study config: n grid is empty".into()));
        }
        if self.replicates == 0 {
            return Err(Error::Config("study config: replicates must be at least 1".into()));
        }
        self.n
            .iter()
            .map(|&n| {
                let spec = GenSpec {
                    n,
                    family: self.family,
                    beta: self.beta.clone(),
                    gamma_star: self.gamma_star.clone(),
                    covariates: self.covariates.clone(),
                    dependence: self.dependence,
                    noise_free: self.noise_free,
                    seed: self.seed,
                    stream: 0,
                };
                spec.validate()?;
                Ok(spec)
            })
            .collect()
    }
}
