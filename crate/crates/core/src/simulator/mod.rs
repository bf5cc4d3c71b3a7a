//! Synthetic networks from known parameters, and Monte Carlo studies of the
//! estimator.
//!
//! Randomness comes from ChaCha20 (a counter-based stream cipher generator).
//! A [`GenSpec`] names a 64-bit `seed`, expanded to the cipher key by
//! `ChaCha20Rng::seed_from_u64`, and a `stream` selecting one of the 2^64
//! independent counter streams under that key. Studies derive a stream per
//! (grid point, replicate, attempt), so results do not depend on scheduling.

mod study;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::edge_models::EdgeFamily;
use crate::error::{Error, Result};
use crate::estimator::{pair_indices, Params};
use crate::graph::{pair_count, NetworkData};

pub use study::{
    run_mc_study, FailureRecord, McStudyReport, NSummary, RateSlopes, ReplicateRecord,
    MAX_ATTEMPTS,
};

/// How the true degree parameters are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum BetaRule {
    Fixed { values: Vec<f64> },
    /// I.i.d. uniform on `[-bound, bound]`.
    Uniform { bound: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum CovariateRule {
    /// Each entry independently +1 or -1 with probability 1/2.
    IidPm1 { p: usize },
    IidUniform { p: usize, low: f64, high: f64 },
    /// Node positions uniform on the unit cube of dimension `dim`; the single
    /// covariate is the Euclidean distance between the endpoints.
    NodeDistance { dim: usize },
}

impl CovariateRule {
    pub fn dim(&self) -> usize {
        match *self {
            CovariateRule::IidPm1 { p } | CovariateRule::IidUniform { p, .. } => p,
            CovariateRule::NodeDistance { .. } => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Dependence {
    #[default]
    Independent,
    /// Latent thresholds `U_ij = sqrt(rho) W + sqrt(1 - rho) e_ij` with one
    /// shared standard normal `W` per network; `a_ij = 1(pi_ij > U_ij)`.
    EquicorrelatedProbit { rho: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub n: usize,
    pub family: EdgeFamily,
    pub beta: BetaRule,
    pub gamma_star: Vec<f64>,
    pub covariates: CovariateRule,
    #[serde(default)]
    pub dependence: Dependence,
    /// Replace sampled weights by their expectations `mu(pi*_ij)`.
    #[serde(default)]
    pub noise_free: bool,
    pub seed: u64,
    #[serde(default)]
    pub stream: u64,
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!("n must be at least 2, got {}", self.n)));
        }
        let p = self.covariates.dim();
        if p == 0 {
            return Err(Error::Config("covariate dimension must be at least 1".into()));
        }
        if self.gamma_star.len() != p {
            return Err(Error::Config(format!(
                "gamma_star has length {}, covariate rule produces {p}",
                self.gamma_star.len()
            )));
        }
        if self.gamma_star.iter().any(|g| !g.is_finite()) {
            return Err(Error::Config("gamma_star must be finite".into()));
        }
        match &self.beta {
            BetaRule::Fixed { values } => {
                if values.len() != self.n || values.iter().any(|b| !b.is_finite()) {
                    return Err(Error::Config(format!("fixed beta needs {} finite values", self.n)));
                }
            }
            BetaRule::Uniform { bound } => {
                if !(bound.is_finite() && *bound >= 0.0) {
                    return Err(Error::Config(format!("beta bound must be finite and >= 0, got {bound}")));
                }
            }
        }
        match self.covariates {
            CovariateRule::IidUniform { low, high, .. } if !(low < high) => {
                return Err(Error::Config(format!("uniform covariates need low < high, got [{low}, {high}]")));
            }
            CovariateRule::NodeDistance { dim: 0 } => {
                return Err(Error::Config("node_distance needs dim >= 1".into()));
            }
            _ => {}
        }
        if let Dependence::EquicorrelatedProbit { rho } = self.dependence {
            if self.family != EdgeFamily::Probit {
                return Err(Error::Config(format!(
                    "equicorrelated dependence requires the probit family, not {}",
                    self.family
                )));
            }
            if !(0.0..1.0).contains(&rho) {
                return Err(Error::Config(format!("rho must lie in [0, 1), got {rho}")));
            }
        }
        Ok(())
    }

    fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Generated network together with the parameters that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulated {
    pub data: NetworkData,
    pub truth: Params,
}

pub fn generate(spec: &GenSpec) -> Result<NetworkData> {
    Ok(generate_with_truth(spec)?.data)
}

/// Draws `beta*`, the covariates and the edge weights, in that order, from
/// the stream named by `spec`.
pub fn generate_with_truth(spec: &GenSpec) -> Result<Simulated> {
    spec.validate()?;
    let mut rng = spec.rng();
    let n = spec.n;
    let beta = match &spec.beta {
        BetaRule::Fixed { values } => values.clone(),
        BetaRule::Uniform { bound } if *bound > 0.0 => (0..n).map(|_| rng.gen_range(-bound..=*bound)).collect(),
        BetaRule::Uniform { .. } => vec![0.0; n],
    };
    let p = spec.covariates.dim();
    let m = pair_count(n);
    let covariates: Vec<f64> = match spec.covariates {
        CovariateRule::IidPm1 { .. } => (0..m * p).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect(),
        CovariateRule::IidUniform { low, high, .. } => (0..m * p).map(|_| rng.gen_range(low..high)).collect(),
        CovariateRule::NodeDistance { dim } => {
            let pos: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect()).collect();
            crate::graph::pairs(n)
                .map(|(i, j)| {
                    pos[i].iter().zip(&pos[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
                })
                .collect()
        }
    };
    let truth = Params { beta, gamma: spec.gamma_star.clone() };
    let shell = NetworkData::new(n, p, vec![0.0; m], covariates)?;
    let pis = pair_indices(&shell, &truth)?;
    let weights: Vec<f64> = if spec.noise_free {
        pis.iter().map(|&pi| spec.family.mean(pi)).collect()
    } else {
        match spec.dependence {
            Dependence::Independent => pis.iter().map(|&pi| spec.family.sample(pi, &mut rng)).collect(),
            Dependence::EquicorrelatedProbit { rho } => {
                let common: f64 = rng.sample(StandardNormal);
                let (a, b) = (rho.sqrt(), (1.0 - rho).sqrt());
                pis.iter()
                    .map(|&pi| {
                        let e: f64 = rng.sample(StandardNormal);
                        if pi > a * common + b * e {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .collect()
            }
        }
    };
    Ok(Simulated { data: shell.with_weights(weights)?, truth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::pair_index;

    pub(crate) fn spec(n: usize, family: EdgeFamily) -> GenSpec {
        GenSpec {
            n,
            family,
            beta: BetaRule::Uniform { bound: 1.0 },
            gamma_star: vec![0.5, -0.5],
            covariates: CovariateRule::IidPm1 { p: 2 },
            dependence: Dependence::Independent,
            noise_free: false,
            seed: 42,
            stream: 0,
        }
    }

    #[test]
    fn reproducible_given_seed_and_stream() {
        let s = spec(30, EdgeFamily::Logistic);
        assert_eq!(generate(&s).unwrap(), generate(&s).unwrap());
        let other = GenSpec { stream: 1, ..s.clone() };
        assert_ne!(generate(&s).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn noise_free_weights_are_expectations() {
        let s = GenSpec { noise_free: true, ..spec(12, EdgeFamily::Poisson) };
        let sim = generate_with_truth(&s).unwrap();
        let pis = pair_indices(&sim.data, &sim.truth).unwrap();
        for (w, pi) in sim.data.weights().iter().zip(pis) {
            assert_eq!(*w, pi.exp());
        }
    }

    #[test]
    fn logistic_density_at_origin() {
        let s = GenSpec {
            beta: BetaRule::Uniform { bound: 0.0 },
            gamma_star: vec![0.0, 0.0],
            ..spec(200, EdgeFamily::Logistic)
        };
        let data = generate(&s).unwrap();
        let m = data.num_pairs() as f64;
        let density = data.weights().iter().sum::<f64>() / m;
        assert!((density - 0.5).abs() < 3.0 * (0.25 / m).sqrt(), "{density}");
    }

    #[test]
    fn marginals_match_mean_function() {
        // Per-pair frequency over R replicates against mu(pi*).
        for family in EdgeFamily::ALL {
            let base = GenSpec {
                beta: BetaRule::Fixed { values: (0..8).map(|i| 0.2 * i as f64 - 0.7).collect() },
                gamma_star: vec![0.5, -0.5],
                ..spec(8, family)
            };
            let reps = 10_000;
            let truth = generate_with_truth(&base).unwrap();
            let mut sums = vec![0.0; truth.data.num_pairs()];
            for r in 0..reps {
                let mut rng = GenSpec { stream: r + 1, ..base.clone() }.rng();
                let pis = pair_indices(&truth.data, &truth.truth).unwrap();
                for (s, pi) in sums.iter_mut().zip(pis) {
                    *s += family.sample(pi, &mut rng);
                }
            }
            let pis = pair_indices(&truth.data, &truth.truth).unwrap();
            for k in (0..truth.data.num_pairs()).take(20) {
                let mean = sums[k] / reps as f64;
                let mu = family.mean(pis[k]);
                let var = family.variance(pis[k]);
                assert!((mean - mu).abs() <= 4.0 * (var / reps as f64).sqrt(), "{family} pair {k}");
            }
        }
    }

    #[test]
    fn node_distance_covariates() {
        let s = GenSpec {
            covariates: CovariateRule::NodeDistance { dim: 2 },
            gamma_star: vec![-1.0],
            ..spec(10, EdgeFamily::Logistic)
        };
        let data = generate(&s).unwrap();
        assert_eq!(data.p(), 1);
        assert!(data.covariates().iter().all(|&z| (0.0..=2f64.sqrt()).contains(&z)));
        assert_eq!(data.covariate(3, 7), data.covariate(7, 3));
        let _ = pair_index(3, 7);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let s = spec(10, EdgeFamily::Logistic);
        let bad_dep = GenSpec { dependence: Dependence::EquicorrelatedProbit { rho: 0.3 }, ..s.clone() };
        assert!(matches!(generate(&bad_dep), Err(Error::Config(_))));
        let bad_rho = GenSpec {
            family: EdgeFamily::Probit,
            dependence: Dependence::EquicorrelatedProbit { rho: 1.0 },
            ..s.clone()
        };
        assert!(generate(&bad_rho).is_err());
        let bad_gamma = GenSpec { gamma_star: vec![1.0], ..s.clone() };
        assert!(generate(&bad_gamma).is_err());
        let bad_beta = GenSpec { beta: BetaRule::Fixed { values: vec![0.0; 3] }, ..s };
        assert!(generate(&bad_beta).is_err());
    }

    #[test]
    fn independent_and_rho_zero_probit_agree() {
        // Two-sample comparison of per-pair edge frequencies.
        let n = 30;
        let reps = 200;
        let base = GenSpec {
            family: EdgeFamily::Probit,
            beta: BetaRule::Fixed { values: (0..n).map(|i| (i as f64 / n as f64) - 0.5).collect() },
            gamma_star: vec![0.3, -0.3],
            ..spec(n, EdgeFamily::Probit)
        };
        let dep = GenSpec { dependence: Dependence::EquicorrelatedProbit { rho: 0.0 }, ..base.clone() };
        let mut f_ind = vec![0.0; pair_count(n)];
        let mut f_dep = vec![0.0; pair_count(n)];
        for r in 0..reps {
            // Streams share a seed, so covariates vary by stream; compare the
            // overall frequency per replicate pair instead.
            let a = generate(&GenSpec { stream: r, ..base.clone() }).unwrap();
            let b = generate(&GenSpec { stream: r, ..dep.clone() }).unwrap();
            for k in 0..pair_count(n) {
                f_ind[k] += a.weights()[k];
                f_dep[k] += b.weights()[k];
            }
        }
        let total = (reps as usize * pair_count(n)) as f64;
        let p1 = f_ind.iter().sum::<f64>() / total;
        let p2 = f_dep.iter().sum::<f64>() / total;
        let pooled = 0.5 * (p1 + p2);
        let se = (pooled * (1.0 - pooled) * 2.0 / total).sqrt();
        assert!((p1 - p2).abs() <= 3.0 * se, "{p1} vs {p2}");
    }
}
