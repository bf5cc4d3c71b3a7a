//! Incidental-parameter bias correction and standard errors.

use nalgebra::{DMatrix, DVector};

use super::fit::FitResult;
use super::moments::{check_params, pair_indices};
use super::profile::{profile_system, ProfileSystem};
use super::Params;
use crate::edge_models::EdgeFamily;
use crate::error::{Error, Result};
use crate::graph::{pairs, NetworkData};

/// `B_hat = 1 / (2 sqrt(N)) * sum_i [sum_{j != i} z_ij mu''_ij] / [sum_{j != i} mu'_ij]`
/// with `N = n (n - 1)`.
pub fn bias_hat_b(data: &NetworkData, family: EdgeFamily, params: &Params) -> Result<Vec<f64>> {
    let pis = pair_indices(data, params)?;
    bias_from_indices(data, family, &pis)
}

pub(crate) fn bias_from_indices(data: &NetworkData, family: EdgeFamily, pis: &[f64]) -> Result<Vec<f64>> {
    let n = data.n();
    let p = data.p();
    let mut num = vec![0.0; n * p];
    let mut den = vec![0.0; n];
    for (k, ((i, j), &pi)) in pairs(n).zip(pis).enumerate() {
        let d = family.derivs(pi);
        den[i] += d.d1;
        den[j] += d.d1;
        for (c, z) in data.pair_covariate(k).iter().enumerate() {
            num[i * p + c] += z * d.d2;
            num[j * p + c] += z * d.d2;
        }
    }
    if let Some(i) = den.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::Domain(format!("sum of mu' over the pairs of node {i} is zero")));
    }
    let scale = 1.0 / (2.0 * ((n * (n - 1)) as f64).sqrt());
    let mut b = vec![0.0; p];
    for i in 0..n {
        for c in 0..p {
            b[c] += num[i * p + c] / den[i];
        }
    }
    Ok(b.into_iter().map(|v| v * scale).collect())
}

/// `gamma_bc = gamma - sqrt(N) H^-1 B_hat`.
pub fn bias_correct(gamma: &[f64], h: &DMatrix<f64>, bias: &[f64], n: usize) -> Result<Vec<f64>> {
    let p = gamma.len();
    if h.nrows() != p || h.ncols() != p || bias.len() != p {
        return Err(Error::InvalidData("gamma, H and B_hat dimensions disagree".into()));
    }
    let shift = h
        .clone()
        .lu()
        .solve(&DVector::from_column_slice(bias))
        .filter(|v| v.iter().all(|x| x.is_finite()))
        .ok_or_else(|| Error::Singular("H is singular; cannot bias-correct".into()))?;
    let root_n = ((n * (n - 1)) as f64).sqrt();
    Ok(gamma.iter().zip(shift.iter()).map(|(g, s)| g - root_n * s).collect())
}

/// Bias-corrected `gamma` from a finished fit.
pub fn bias_correct_gamma(fit: &FitResult) -> Result<Vec<f64>> {
    let p = fit.p;
    let h = DMatrix::from_fn(p, p, |r, c| fit.h_hat[r][c]);
    bias_correct(&fit.params.gamma, &h, &fit.bias_hat, fit.n)
}

/// Standard errors at `params`: `se_beta_i = v_ii^{-1/2}` with
/// `v_ii = sum_j mu'_ij`, and `se_gamma` from the sandwich
/// `Hbar^-1 Omega Hbar^-1 / N`.
pub fn standard_errors(
    data: &NetworkData,
    family: EdgeFamily,
    params: &Params,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_params(data, params)?;
    let pis = pair_indices(data, params)?;
    let sys = profile_system(data, family, &pis)?;
    Ok((se_beta_from_diag(&sys.blocks.w)?, sandwich_se(data, family, &pis, &sys)?))
}

pub(crate) fn se_beta_from_diag(w: &DMatrix<f64>) -> Result<Vec<f64>> {
    w.diagonal()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if v > 0.0 {
                Ok(1.0 / v.sqrt())
            } else {
                Err(Error::Domain(format!("sum of mu' over the pairs of node {i} is zero")))
            }
        })
        .collect()
}

/// Plug-in sandwich under independent dyads. The projected score of pair
/// `(i, j)` is `r_ij (z_ij - K_i - K_j)` with `K = V_gamma_beta V^-1` and
/// `r_ij = a_ij - mu_ij`; `Omega = (1/N) sum_{j<i} s s'`.
pub(crate) fn sandwich_se(
    data: &NetworkData,
    family: EdgeFamily,
    pis: &[f64],
    sys: &ProfileSystem,
) -> Result<Vec<f64>> {
    let n = data.n();
    let p = data.p();
    let big_n = (n * (n - 1)) as f64;
    // V_gamma_beta V^-1 = F_gamma' (-W^-1), so column i of K is -(W^-1 F_gamma)_i.
    let k = &sys.w_inv_fg;
    let mut omega = DMatrix::<f64>::zeros(p, p);
    let mut s = vec![0.0; p];
    for (idx, (((i, j), &pi), &a)) in pairs(n).zip(pis).zip(data.weights()).enumerate() {
        let r = a - family.mean(pi);
        let z = data.pair_covariate(idx);
        for c in 0..p {
            s[c] = r * (z[c] + k[(i, c)] + k[(j, c)]);
        }
        for a_ in 0..p {
            for b_ in 0..p {
                omega[(a_, b_)] += s[a_] * s[b_];
            }
        }
    }
    omega /= big_n;
    let hbar = &sys.h / big_n;
    let hbar_inv = hbar
        .try_inverse()
        .ok_or_else(|| Error::Singular("H is singular; no standard errors".into()))?;
    let cov = &hbar_inv * omega * hbar_inv.transpose() / big_n;
    Ok((0..p).map(|c| cov[(c, c)].max(0.0).sqrt()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_data(n: usize, p: usize, seed: u64) -> NetworkData {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = n * (n - 1) / 2;
        let w = (0..m).map(|_| if rng.gen_bool(0.5) { 1.0 } else { 0.0 }).collect();
        let z = (0..m * p).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
        NetworkData::new(n, p, w, z).unwrap()
    }

    #[test]
    fn bias_vanishes_at_logistic_origin() {
        let data = random_data(10, 2, 1);
        let b = bias_hat_b(&data, EdgeFamily::Logistic, &Params::zeros(10, 2)).unwrap();
        assert!(b.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn bias_vanishes_without_covariates() {
        let data = NetworkData::from_fn(6, 1, |_, _| 1.0, |_, _, _| 0.0).unwrap();
        let params = Params { beta: vec![0.3, -0.1, 0.2, 0.0, 0.5, -0.4], gamma: vec![1.0] };
        assert_eq!(bias_hat_b(&data, EdgeFamily::Poisson, &params).unwrap(), vec![0.0]);
    }

    #[test]
    fn poisson_bias_matches_weighted_row_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 9;
        let data = NetworkData::from_fn(n, 1, |_, _| 0.0, |_, _, _| rng.gen_range(-2.0..2.0)).unwrap();
        let params = Params { beta: (0..n).map(|i| 0.1 * i as f64 - 0.4).collect(), gamma: vec![0.3] };
        let b = bias_hat_b(&data, EdgeFamily::Poisson, &params).unwrap();
        let mut total = 0.0;
        for i in 0..n {
            let (mut num, mut den) = (0.0, 0.0);
            for j in 0..n {
                if j != i {
                    let z = data.covariate(i, j)[0];
                    let mu = (params.beta[i] + params.beta[j] + 0.3 * z).exp();
                    num += z * mu;
                    den += mu;
                }
            }
            total += num / den;
        }
        let expected = total / (2.0 * ((n * (n - 1)) as f64).sqrt());
        assert!((b[0] - expected).abs() < 1e-13);
    }

    #[test]
    fn zero_bias_leaves_gamma_unchanged() {
        let h = DMatrix::from_row_slice(2, 2, &[-3.0, 0.5, 0.5, -2.0]);
        assert_eq!(bias_correct(&[0.4, -0.2], &h, &[0.0, 0.0], 10).unwrap(), vec![0.4, -0.2]);
    }

    #[test]
    fn scalar_correction_unwinds() {
        let n = 12;
        let big_n = (n * (n - 1)) as f64;
        let hbar = 0.07;
        let b = 0.013;
        let h = DMatrix::from_element(1, 1, -big_n * hbar);
        let got = bias_correct(&[0.5], &h, &[b], n).unwrap()[0];
        assert!((got - (0.5 + b / (big_n.sqrt() * hbar))).abs() < 1e-15);
    }

    #[test]
    fn singular_h_cannot_correct() {
        let h = DMatrix::zeros(1, 1);
        assert!(bias_correct(&[0.5], &h, &[0.1], 5).is_err());
    }

    #[test]
    fn se_beta_at_logistic_origin() {
        let n = 11;
        let data = random_data(n, 1, 5);
        let (se_beta, se_gamma) = standard_errors(&data, EdgeFamily::Logistic, &Params::zeros(n, 1)).unwrap();
        let expected = 2.0 / ((n - 1) as f64).sqrt();
        assert!(se_beta.iter().all(|s| (s - expected).abs() < 1e-14));
        assert!(se_gamma[0] > 0.0);
    }
}
