//! Degree equations `F_gamma(beta) = 0` for fixed `gamma`.

use statrs::distribution::{ContinuousCDF, Normal};

use super::moments::{check_dims, inf_norm, pair_offsets};
use super::{BetaUpdate, SolverConfig};
use crate::edge_models::EdgeFamily;
use crate::error::{Error, Result};
use crate::graph::{pairs, NetworkData};

/// Largest sup-norm change applied to `beta` in one iteration.
const MAX_STEP: f64 = 3.0;
const MAX_HALVINGS: usize = 50;
const ARMIJO: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct BetaSolution {
    pub beta: Vec<f64>,
    pub iterations: usize,
    /// `||F_gamma(beta)||_inf` at the returned point.
    pub residual: f64,
}

/// Symmetric starting point matching each node's mean degree; `gamma` is
/// not used.
pub fn default_beta_init(data: &NetworkData, family: EdgeFamily) -> Vec<f64> {
    let others = (data.n() - 1) as f64;
    let delta = 1.0 / (2.0 * others);
    data.degrees()
        .iter()
        .map(|&d| match family {
            EdgeFamily::Logistic => {
                let r = (d / others).clamp(delta, 1.0 - delta);
                0.5 * (r / (1.0 - r)).ln()
            }
            EdgeFamily::Probit => {
                let r = (d / others).clamp(delta, 1.0 - delta);
                0.5 * Normal::new(0.0, 1.0).unwrap().inverse_cdf(r)
            }
            EdgeFamily::Poisson => 0.5 * (d.max(0.5) / others).ln(),
        })
        .collect()
}

/// Solves the degree equations for fixed `gamma` to `config.tol_f`.
pub fn solve_beta_given_gamma(
    data: &NetworkData,
    family: EdgeFamily,
    gamma: &[f64],
    config: &SolverConfig,
    beta_init: Option<&[f64]>,
) -> Result<BetaSolution> {
    config.validate()?;
    let init = match beta_init {
        Some(b) => b.to_vec(),
        None => default_beta_init(data, family),
    };
    check_dims(data, &init, gamma)?;
    ensure_interior(data, family)?;
    solve_with_tol(data, family, gamma, config, init, config.tol_f)
}

pub(crate) fn ensure_interior(data: &NetworkData, family: EdgeFamily) -> Result<()> {
    let nodes = data.degenerate_nodes(family);
    if nodes.is_empty() {
        Ok(())
    } else {
        Err(Error::DegenerateDegrees { nodes })
    }
}

/// Rounding floor for `||F||_inf`: each `F_i` sums `n - 1` terms.
pub(crate) fn residual_floor(data: &NetworkData) -> f64 {
    let dmax = data.degrees().iter().fold(1.0_f64, |m, d| m.max(d.abs()));
    1e-15 * data.n() as f64 * dmax
}

pub(crate) fn solve_with_tol(
    data: &NetworkData,
    family: EdgeFamily,
    gamma: &[f64],
    config: &SolverConfig,
    init: Vec<f64>,
    tol: f64,
) -> Result<BetaSolution> {
    let tol = tol.max(residual_floor(data));
    let offsets = pair_offsets(data, gamma);
    match config.beta_update {
        BetaUpdate::Preconditioned => preconditioned(data, family, &offsets, config, init, tol),
        BetaUpdate::LogRatio => {
            if family != EdgeFamily::Logistic {
                return Err(Error::Config(format!(
                    "the log-ratio update is only defined for the logistic family, not {family}"
                )));
            }
            log_ratio(data, family, &offsets, config, init, tol)
        }
    }
}

/// Residual, potential and `mu'` per pair at one `beta`.
struct State {
    beta: Vec<f64>,
    f: Vec<f64>,
    /// `sum_j mu'_ij`, the diagonal of `-V`.
    w_diag: Vec<f64>,
    d1: Vec<f64>,
    psi: f64,
    f_norm: f64,
}

fn evaluate(data: &NetworkData, family: EdgeFamily, offsets: &[f64], beta: Vec<f64>) -> State {
    let n = data.n();
    let mut f = data.degrees().to_vec();
    let mut w_diag = vec![0.0; n];
    let mut d1 = Vec::with_capacity(offsets.len());
    let mut psi = 0.0;
    for (((i, j), &o), &a) in pairs(n).zip(offsets).zip(data.weights()) {
        let pi = beta[i] + beta[j] + o;
        let (mu, dmu) = family.mean_d1(pi);
        f[i] -= mu;
        f[j] -= mu;
        w_diag[i] += dmu;
        w_diag[j] += dmu;
        d1.push(dmu);
        psi += a * pi - family.cumulant(pi);
    }
    let f_norm = inf_norm(&f);
    State { beta, f, w_diag, d1, psi, f_norm }
}

fn preconditioned(
    data: &NetworkData,
    family: EdgeFamily,
    offsets: &[f64],
    config: &SolverConfig,
    init: Vec<f64>,
    tol: f64,
) -> Result<BetaSolution> {
    let n = data.n();
    let mut state = evaluate(data, family, offsets, init);
    for iter in 0..config.max_inner_beta {
        if state.f_norm <= tol {
            return Ok(BetaSolution { beta: state.beta, iterations: iter, residual: state.f_norm });
        }
        if state.w_diag.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::Singular("degree Jacobian has a zero row".into()));
        }
        // x = S F, then the step length minimising the local quadratic model
        // along x: (F'x) / (x' W x).
        let x: Vec<f64> = state.f.iter().zip(&state.w_diag).map(|(f, w)| f / w).collect();
        let mut wx = vec![0.0; n];
        for ((i, j), &d1) in pairs(n).zip(&state.d1) {
            let s = d1 * (x[i] + x[j]);
            wx[i] += s;
            wx[j] += s;
        }
        let fx: f64 = state.f.iter().zip(&x).map(|(a, b)| a * b).sum();
        let xwx: f64 = x.iter().zip(&wx).map(|(a, b)| a * b).sum();
        let mut step = if xwx > 0.0 { fx / xwx } else { 1.0 } * config.damping;
        let xmax = inf_norm(&x);
        if step * xmax > MAX_STEP {
            step = MAX_STEP / xmax;
        }

        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<f64> = state.beta.iter().zip(&x).map(|(b, xi)| b + step * xi).collect();
            let next = evaluate(data, family, offsets, trial);
            let armijo = next.psi >= state.psi + ARMIJO * step * fx;
            if next.f_norm.is_finite() && (armijo || next.f_norm < state.f_norm) {
                accepted = Some(next);
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some(next) => state = next,
            None => {
                return Err(Error::NoConvergence {
                    stage: "degree solver (line search)",
                    iterations: iter,
                    residual: state.f_norm,
                    trace: None,
                })
            }
        }
    }
    if state.f_norm <= tol {
        return Ok(BetaSolution {
            beta: state.beta,
            iterations: config.max_inner_beta,
            residual: state.f_norm,
        });
    }
    Err(Error::NoConvergence {
        stage: "degree solver",
        iterations: config.max_inner_beta,
        residual: state.f_norm,
        trace: None,
    })
}

/// Fixed point `beta_i <- log d_i - log sum_j 1 / (e^{-beta_j - z_ij'gamma} + e^{beta_i})`.
fn log_ratio(
    data: &NetworkData,
    family: EdgeFamily,
    offsets: &[f64],
    config: &SolverConfig,
    init: Vec<f64>,
    tol: f64,
) -> Result<BetaSolution> {
    let n = data.n();
    let mut beta = init;
    let mut f_norm = f64::INFINITY;
    for iter in 0..config.max_inner_beta {
        let mut expected = vec![0.0; n];
        for ((i, j), &o) in pairs(n).zip(offsets) {
            let mu = family.mean(beta[i] + beta[j] + o);
            expected[i] += mu;
            expected[j] += mu;
        }
        f_norm = data
            .degrees()
            .iter()
            .zip(&expected)
            .fold(0.0_f64, |m, (d, e)| m.max((d - e).abs()));
        if f_norm <= tol {
            return Ok(BetaSolution { beta, iterations: iter, residual: f_norm });
        }
        for ((b, d), e) in beta.iter_mut().zip(data.degrees()).zip(&expected) {
            *b += d.ln() - e.ln();
        }
    }
    Err(Error::NoConvergence {
        stage: "degree solver (log-ratio)",
        iterations: config.max_inner_beta,
        residual: f_norm,
        trace: None,
    })
}
