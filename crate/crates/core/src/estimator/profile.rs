//! Profile function `Q_c(gamma)` and its Jacobian
//! `H = dQ/dgamma - dQ/dbeta [dF/dbeta]^-1 dF/dgamma`.

use nalgebra::{DMatrix, SymmetricEigen};

use super::beta::{ensure_interior, solve_with_tol, BetaSolution};
use super::moments::{check_gamma, check_params, jacobian_blocks, pair_indices, q_from_indices, JacobianBlocks};
use super::{Params, SolverConfig};
use crate::edge_models::EdgeFamily;
use crate::error::{Error, Result};
use crate::graph::NetworkData;

/// Relative size below which an eigenvalue of `-H` counts as zero.
const SINGULAR_RTOL: f64 = 1e-9;

/// `Q(beta_hat(gamma), gamma)` where `beta_hat(gamma)` solves the degree
/// equations at this `gamma`.
pub fn profile_q_c(
    data: &NetworkData,
    family: EdgeFamily,
    gamma: &[f64],
    config: &SolverConfig,
) -> Result<Vec<f64>> {
    config.validate()?;
    check_gamma(data, gamma)?;
    ensure_interior(data, family)?;
    let init = super::default_beta_init(data, family);
    let (q, _) = profile_at(data, family, gamma, config, init, config.tol_f)?;
    Ok(q)
}

pub(crate) fn profile_at(
    data: &NetworkData,
    family: EdgeFamily,
    gamma: &[f64],
    config: &SolverConfig,
    warm: Vec<f64>,
    tol: f64,
) -> Result<(Vec<f64>, BetaSolution)> {
    let sol = solve_with_tol(data, family, gamma, config, warm, tol)?;
    let params = Params { beta: sol.beta.clone(), gamma: gamma.to_vec() };
    let pis = pair_indices(data, &params)?;
    Ok((q_from_indices(data, family, &pis), sol))
}

/// Jacobian blocks together with `H` and `W^-1 dF/dgamma`.
pub(crate) struct ProfileSystem {
    pub blocks: JacobianBlocks,
    /// `W^-1 F_gamma` (n x p) with `W = -dF/dbeta'`.
    pub w_inv_fg: DMatrix<f64>,
    pub h: DMatrix<f64>,
}

pub(crate) fn profile_system(data: &NetworkData, family: EdgeFamily, pis: &[f64]) -> Result<ProfileSystem> {
    let blocks = jacobian_blocks(data, family, pis);
    let chol = blocks
        .w
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Singular("degree Jacobian dF/dbeta is not invertible".into()))?;
    let w_inv_fg = chol.solve(&blocks.f_gamma);
    // dQ/dbeta' = F_gamma' and [dF/dbeta']^-1 = -W^-1.
    let h = &blocks.q_gamma + blocks.f_gamma.transpose() * &w_inv_fg;
    let h = 0.5 * (&h + h.transpose());
    Ok(ProfileSystem { blocks, w_inv_fg, h })
}

/// Analytic `H(beta, gamma)`; the solve against `dF/dbeta'` is exact.
pub fn profile_jacobian_h(data: &NetworkData, family: EdgeFamily, params: &Params) -> Result<DMatrix<f64>> {
    check_params(data, params)?;
    let pis = pair_indices(data, params)?;
    Ok(profile_system(data, family, &pis)?.h)
}

/// True when `H` is numerically singular relative to the scale of
/// `dQ/dgamma`, as happens when a covariate is collinear with the degree
/// effects (for instance a constant covariate).
pub fn is_singular_design(data: &NetworkData, family: EdgeFamily, params: &Params) -> Result<bool> {
    check_params(data, params)?;
    let pis = pair_indices(data, params)?;
    let sys = profile_system(data, family, &pis)?;
    Ok(singular(&sys))
}

pub(crate) fn singular(sys: &ProfileSystem) -> bool {
    let scale = -sys.blocks.q_gamma.trace();
    if !(scale > 0.0) {
        return true;
    }
    let neg_h = -&sys.h;
    let min_eig = SymmetricEigen::new(neg_h).eigenvalues.min();
    !(min_eig > SINGULAR_RTOL * scale)
}
