//! Moment functions `F` (degree equations) and `Q` (covariate equations),
//! the concave potential they are the gradient of, and the analytic
//! Jacobian blocks.

use nalgebra::{DMatrix, DVector};

use super::Params;
use crate::edge_models::EdgeFamily;
use crate::error::{Error, Result};
use crate::graph::{pairs, NetworkData};

pub(crate) fn check_params(data: &NetworkData, params: &Params) -> Result<()> {
    check_dims(data, &params.beta, &params.gamma)
}

pub(crate) fn check_dims(data: &NetworkData, beta: &[f64], gamma: &[f64]) -> Result<()> {
    if beta.len() != data.n() {
        return Err(Error::InvalidData(format!(
            "beta has length {}, expected n = {}",
            beta.len(),
            data.n()
        )));
    }
    check_gamma(data, gamma)?;
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::Domain("beta must be finite".into()));
    }
    Ok(())
}

pub(crate) fn check_gamma(data: &NetworkData, gamma: &[f64]) -> Result<()> {
    if gamma.len() != data.p() {
        return Err(Error::InvalidData(format!(
            "gamma has length {}, expected p = {}",
            gamma.len(),
            data.p()
        )));
    }
    if gamma.iter().any(|g| !g.is_finite()) {
        return Err(Error::Domain("gamma must be finite".into()));
    }
    Ok(())
}

/// Homophily component `z_ij' gamma` for every pair, in storage order.
pub(crate) fn pair_offsets(data: &NetworkData, gamma: &[f64]) -> Vec<f64> {
    (0..data.num_pairs())
        .map(|k| dot(data.pair_covariate(k), gamma))
        .collect()
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Index `pi_ij` for every pair.
pub fn pair_indices(data: &NetworkData, params: &Params) -> Result<Vec<f64>> {
    check_params(data, params)?;
    let offsets = pair_offsets(data, &params.gamma);
    Ok(pairs(data.n())
        .zip(offsets)
        .map(|((i, j), o)| params.beta[i] + params.beta[j] + o)
        .collect())
}

/// `F_i = d_i - sum_{j != i} mu(pi_ij)`.
pub fn moment_residual_f(data: &NetworkData, family: EdgeFamily, params: &Params) -> Result<Vec<f64>> {
    let pis = pair_indices(data, params)?;
    let mut f = data.degrees().to_vec();
    for ((i, j), pi) in pairs(data.n()).zip(pis) {
        let mu = family.mean(pi);
        f[i] -= mu;
        f[j] -= mu;
    }
    Ok(f)
}

/// `Q = sum_{j < i} z_ij (a_ij - mu(pi_ij))`.
pub fn moment_residual_q(data: &NetworkData, family: EdgeFamily, params: &Params) -> Result<Vec<f64>> {
    let pis = pair_indices(data, params)?;
    Ok(q_from_indices(data, family, &pis))
}

pub(crate) fn q_from_indices(data: &NetworkData, family: EdgeFamily, pis: &[f64]) -> Vec<f64> {
    let mut q = vec![0.0; data.p()];
    for (k, (&pi, &a)) in pis.iter().zip(data.weights()).enumerate() {
        let r = a - family.mean(pi);
        for (qc, zc) in q.iter_mut().zip(data.pair_covariate(k)) {
            *qc += zc * r;
        }
    }
    q
}

/// Potential `sum_{j < i} (a_ij pi_ij - M(pi_ij))` with `M' = mu`. Its
/// gradient in `beta` is `F` and in `gamma` is `Q`.
pub fn potential(data: &NetworkData, family: EdgeFamily, params: &Params) -> Result<f64> {
    let pis = pair_indices(data, params)?;
    Ok(pis
        .iter()
        .zip(data.weights())
        .map(|(&pi, &a)| a * pi - family.cumulant(pi))
        .sum())
}

/// `V = dF / d beta'`. Its negation is diagonally balanced with positive
/// entries `mu'(pi_ij)` off the diagonal.
pub fn beta_jacobian(data: &NetworkData, family: EdgeFamily, params: &Params) -> Result<DMatrix<f64>> {
    let pis = pair_indices(data, params)?;
    let n = data.n();
    let mut v = DMatrix::zeros(n, n);
    for ((i, j), pi) in pairs(n).zip(pis) {
        let d1 = family.derivs(pi).d1;
        v[(i, j)] = -d1;
        v[(j, i)] = -d1;
        v[(i, i)] -= d1;
        v[(j, j)] -= d1;
    }
    Ok(v)
}

/// Analytic Jacobian blocks at one parameter point, with the sign
/// conventions of `F` and `Q`.
#[derive(Debug, Clone)]
pub(crate) struct JacobianBlocks {
    /// `-V`, symmetric and in `L_n`.
    pub w: DMatrix<f64>,
    /// `dF / d gamma'` (n x p); also the transpose of `dQ / d beta'`.
    pub f_gamma: DMatrix<f64>,
    /// `dQ / d gamma'` (p x p).
    pub q_gamma: DMatrix<f64>,
    pub d1: Vec<f64>,
}

pub(crate) fn jacobian_blocks(data: &NetworkData, family: EdgeFamily, pis: &[f64]) -> JacobianBlocks {
    let n = data.n();
    let p = data.p();
    let mut w = DMatrix::zeros(n, n);
    let mut f_gamma = DMatrix::zeros(n, p);
    let mut q_gamma = DMatrix::zeros(p, p);
    let mut d1s = Vec::with_capacity(pis.len());
    for (k, ((i, j), &pi)) in pairs(n).zip(pis).enumerate() {
        let d1 = family.derivs(pi).d1;
        d1s.push(d1);
        w[(i, j)] = d1;
        w[(j, i)] = d1;
        w[(i, i)] += d1;
        w[(j, j)] += d1;
        let z = data.pair_covariate(k);
        for a in 0..p {
            f_gamma[(i, a)] -= z[a] * d1;
            f_gamma[(j, a)] -= z[a] * d1;
            for b in 0..p {
                q_gamma[(a, b)] -= z[a] * z[b] * d1;
            }
        }
    }
    JacobianBlocks { w, f_gamma, q_gamma, d1: d1s }
}

pub(crate) fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

pub(crate) fn to_dvector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}
