use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use super::beta::{default_beta_init, ensure_interior, residual_floor};
use super::inference::{bias_correct, bias_from_indices, sandwich_se, se_beta_from_diag};
use super::moments::{check_params, inf_norm, pair_indices, potential, to_dvector};
use super::profile::{profile_at, profile_system, singular};
use super::{Params, SolverConfig};
use crate::edge_models::EdgeFamily;
use crate::error::{Error, Result};
use crate::graph::{kappa_n, NetworkData};

const MAX_HALVINGS: usize = 40;
const ARMIJO: f64 = 1e-4;
/// The degree equations are solved this much tighter than `tol_f` so that
/// `Q` is not limited by the inner residual.
const INNER_TOL_FACTOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub f_inf: f64,
    pub q_inf: f64,
    /// Degree-solver iterations spent since the previous entry.
    pub inner_iterations: usize,
    /// Accepted fraction of the Newton step in `gamma`.
    pub step: f64,
    pub potential: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitTrace {
    pub entries: Vec<TraceEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub f_inf: f64,
    pub q_inf: f64,
}

/// Observable quantities at the estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Smallest off-diagonal entry of `-dF/dbeta'`.
    pub m_n: f64,
    /// Largest off-diagonal entry of `-dF/dbeta'`.
    #[serde(rename = "M_n")]
    pub big_m_n: f64,
    pub kappa_n: f64,
    /// Smallest eigenvalue of `-H/N`, the distance of `H/N` from singularity.
    pub lambda_min_hbar: f64,
    /// Eigenvalues of `H/N`, ascending.
    pub hbar_eigenvalues: Vec<f64>,
    /// `max |mu'|, max |mu''|, max |mu'''|` over pairs.
    pub derivative_bounds: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub family: EdgeFamily,
    pub n: usize,
    pub p: usize,
    #[serde(flatten)]
    pub params: Params,
    /// Bias-corrected `gamma`; `None` when correction is switched off.
    pub gamma_bc: Option<Vec<f64>>,
    pub se_beta: Vec<f64>,
    pub se_gamma: Vec<f64>,
    pub bias_hat: Vec<f64>,
    /// `H(beta_hat, gamma_hat)`, row-major.
    pub h_hat: Vec<Vec<f64>>,
    pub converged: bool,
    pub iterations: usize,
    pub residuals: Residuals,
    pub diagnostics: Diagnostics,
    pub trace: FitTrace,
}

/// Solves the moment equations by alternating a degree solve with a Newton
/// step on the profile function, then computes the bias correction,
/// standard errors and diagnostics at the solution.
pub fn fit(
    data: &NetworkData,
    family: EdgeFamily,
    config: &SolverConfig,
    init: Option<&Params>,
) -> Result<FitResult> {
    config.validate()?;
    if data.n() < 3 {
        return Err(Error::InvalidData(format!("estimation needs n >= 3, got {}", data.n())));
    }
    data.check_support(family)?;
    ensure_interior(data, family)?;
    let start = match init {
        Some(p) => {
            check_params(data, p)?;
            p.clone()
        }
        None => Params { beta: default_beta_init(data, family), gamma: vec![0.0; data.p()] },
    };
    let inner_tol = (config.tol_f * INNER_TOL_FACTOR).max(residual_floor(data));

    let mut gamma = start.gamma;
    let (mut q, sol) = profile_at(data, family, &gamma, config, start.beta, inner_tol)?;
    let mut beta = sol.beta;
    let mut f_inf = sol.residual;
    let mut psi = potential(data, family, &Params { beta: beta.clone(), gamma: gamma.clone() })?;
    let mut trace = FitTrace::default();
    let mut inner = sol.iterations;
    let mut step = 0.0;
    let mut converged = false;
    let mut iterations = 0;

    for outer in 0..=config.max_outer {
        let q_inf = inf_norm(&q);
        trace.entries.push(TraceEntry {
            iteration: outer,
            f_inf,
            q_inf,
            inner_iterations: inner,
            step,
            potential: psi,
        });
        iterations = outer;
        if f_inf <= config.tol_f && q_inf <= config.tol_q {
            converged = true;
            break;
        }
        if outer == config.max_outer {
            break;
        }

        let pis = pair_indices(data, &Params { beta: beta.clone(), gamma: gamma.clone() })?;
        let sys = profile_system(data, family, &pis)?;
        if singular(&sys) {
            return Err(Error::Singular(
                "profile Jacobian H is singular; a covariate is collinear with the degree effects".into(),
            ));
        }
        let neg_h = (-&sys.h)
            .cholesky()
            .ok_or_else(|| Error::Singular("profile Jacobian H is not negative definite".into()))?;
        // Newton step on Q_c: delta = -H^-1 Q = (-H)^-1 Q.
        let delta = neg_h.solve(&to_dvector(&q));
        let slope: f64 = delta.iter().zip(&q).map(|(d, qi)| d * qi).sum();

        let mut t = 1.0;
        let mut accepted = None;
        inner = 0;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<f64> = gamma.iter().zip(delta.iter()).map(|(g, d)| g + t * d).collect();
            match profile_at(data, family, &trial, config, beta.clone(), inner_tol) {
                Ok((q_trial, sol)) => {
                    inner += sol.iterations;
                    let psi_trial =
                        potential(data, family, &Params { beta: sol.beta.clone(), gamma: trial.clone() })?;
                    let armijo = psi_trial >= psi + ARMIJO * t * slope;
                    if armijo || inf_norm(&q_trial) < q_inf {
                        accepted = Some((trial, q_trial, sol, psi_trial));
                        break;
                    }
                }
                Err(e @ Error::DegenerateDegrees { .. }) => return Err(e),
                Err(_) => {}
            }
            t *= 0.5;
        }
        let Some((g, q_new, sol, psi_new)) = accepted else {
            break;
        };
        gamma = g;
        q = q_new;
        beta = sol.beta;
        f_inf = sol.residual;
        psi = psi_new;
        step = t;
    }

    if !converged {
        let last = trace.entries.last().copied();
        return Err(Error::NoConvergence {
            stage: "moment solver",
            iterations,
            residual: last.map_or(f64::NAN, |e| e.f_inf.max(e.q_inf)),
            trace: Some(Box::new(trace)),
        });
    }

    let params = Params { beta, gamma };
    let residuals = Residuals { f_inf, q_inf: inf_norm(&q) };
    finish(data, family, params, residuals, iterations, trace)
}

fn finish(
    data: &NetworkData,
    family: EdgeFamily,
    params: Params,
    residuals: Residuals,
    iterations: usize,
    trace: FitTrace,
) -> Result<FitResult> {
    let n = data.n();
    let big_n = (n * (n - 1)) as f64;
    let pis = pair_indices(data, &params)?;
    let sys = profile_system(data, family, &pis)?;
    if singular(&sys) {
        return Err(Error::Singular("profile Jacobian H is singular at the estimate".into()));
    }
    let bias_hat = bias_from_indices(data, family, &pis)?;
    let gamma_bc = bias_correct(&params.gamma, &sys.h, &bias_hat, n)?;
    let se_beta = se_beta_from_diag(&sys.blocks.w)?;
    let se_gamma = sandwich_se(data, family, &pis, &sys)?;

    let hbar = &sys.h / big_n;
    let mut eig: Vec<f64> = SymmetricEigen::new(hbar.clone()).eigenvalues.iter().copied().collect();
    eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lambda_min_hbar = eig.iter().map(|e| -e).fold(f64::INFINITY, f64::min);
    let (m_n, big_m_n) = sys
        .blocks
        .d1
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &d| (lo.min(d), hi.max(d)));
    let mut bounds = [0.0_f64; 3];
    for &pi in &pis {
        let d = family.derivs(pi);
        bounds[0] = bounds[0].max(d.d1.abs());
        bounds[1] = bounds[1].max(d.d2.abs());
        bounds[2] = bounds[2].max(d.d3.abs());
    }
    let diagnostics = Diagnostics {
        m_n,
        big_m_n,
        kappa_n: kappa_n(data)?,
        lambda_min_hbar,
        hbar_eigenvalues: eig,
        derivative_bounds: bounds,
    };
    let h_hat = (0..data.p())
        .map(|r| (0..data.p()).map(|c| sys.h[(r, c)]).collect())
        .collect();
    Ok(FitResult {
        family,
        n,
        p: data.p(),
        params,
        gamma_bc: Some(gamma_bc),
        se_beta,
        se_gamma,
        bias_hat,
        h_hat,
        converged: true,
        iterations,
        residuals,
        diagnostics,
        trace,
    })
}
