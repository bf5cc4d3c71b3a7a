//! Moment estimation for undirected network models with degree
//! heterogeneity and homophily.
//!
//! Each edge weight `a_ij` has a known marginal family whose mean depends on
//! the index `pi_ij = beta_i + beta_j + z_ij' gamma`. The crate estimates the
//! node parameters `beta` and the homophily coefficients `gamma` from the
//! degree and covariate moment equations, corrects the incidental-parameter
//! bias in `gamma`, reports standard errors, and ships a simulator for
//! checking the estimator's large-network behaviour.

pub mod balanced;
pub mod cli;
pub mod config;
pub mod edge_models;
pub mod error;
pub mod estimator;
pub mod graph;
pub mod io;
pub mod simulator;

pub use balanced::{check_balanced_class, diag_inverse_approx, BalancedMatrix, ClassCheck};
pub use edge_models::{EdgeFamily, MeanDerivs, Support};
pub use error::{Error, Result};
pub use estimator::{fit, FitResult, Params, SolverConfig};
pub use graph::{degrees, kappa_n, NetworkData};
