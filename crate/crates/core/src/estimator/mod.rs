//! Moment estimation of degree parameters `beta` and homophily coefficients
//! `gamma`.
//!
//! The estimator solves `F(beta, gamma) = 0`, `Q(beta, gamma) = 0` by
//! alternating between the degree equations for fixed `gamma` and a Newton
//! step on the profile function `Q_c(gamma) = Q(beta_hat(gamma), gamma)`.

mod beta;
mod fit;
mod inference;
mod moments;
mod profile;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use beta::{default_beta_init, solve_beta_given_gamma, BetaSolution};
pub use fit::{fit, Diagnostics, FitResult, FitTrace, Residuals, TraceEntry};
pub use inference::{bias_correct, bias_correct_gamma, bias_hat_b, standard_errors};
pub use moments::{
    beta_jacobian, moment_residual_f, moment_residual_q, pair_indices, potential,
};
pub use profile::{is_singular_design, profile_jacobian_h, profile_q_c};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl Params {
    pub fn zeros(n: usize, p: usize) -> Self {
        Params { beta: vec![0.0; n], gamma: vec![0.0; p] }
    }
}

/// How the degree equations are iterated for fixed `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaUpdate {
    /// `beta <- beta + step * S F`, with `S = diag(1 / sum_j mu'_ij)` and the
    /// step set by the local quadratic model, then backtracked.
    #[default]
    Preconditioned,
    /// `beta_i <- beta_i + log d_i - log sum_j mu_ij`. Logistic family only.
    LogRatio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Sup-norm tolerance on the degree equations.
    pub tol_f: f64,
    /// Sup-norm tolerance on the covariate equations.
    pub tol_q: f64,
    pub max_outer: usize,
    pub max_inner_beta: usize,
    /// Multiplier in (0, 1] on the preconditioned degree step.
    pub damping: f64,
    pub beta_update: BetaUpdate,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol_f: 1e-8,
            tol_q: 1e-8,
            max_outer: 200,
            max_inner_beta: 500,
            damping: 1.0,
            beta_update: BetaUpdate::Preconditioned,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_f > 0.0) || !(self.tol_q > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if self.max_outer == 0 || self.max_inner_beta == 0 {
            return Err(Error::Config("iteration caps must be at least 1".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Config(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        Ok(())
    }
}
