//! Edge-marginal families.
//!
//! Every family is a single-index model: the distribution of an edge weight
//! depends on the parameters only through `pi = beta_i + beta_j + z_ij' gamma`.
//! A family exposes its mean function `mu(pi)`, the first three derivatives of
//! `mu` in `pi`, the edge variance and a sampler.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use libm::erfc;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Bound applied to the index before exponentiation. Parameter ranges used in
/// practice keep `|pi|` far below this, so the clamp never activates there.
pub const PI_CLAMP: f64 = 700.0;

/// Poisson means up to this value are sampled by inversion.
const POISSON_INVERSION_MAX: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeFamily {
    Logistic,
    Poisson,
    Probit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Support {
    Binary,
    Count,
}

/// `mu` and its first three derivatives at one index value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanDerivs {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl EdgeFamily {
    pub const ALL: [EdgeFamily; 3] = [EdgeFamily::Logistic, EdgeFamily::Poisson, EdgeFamily::Probit];

    pub fn name(self) -> &'static str {
        match self {
            EdgeFamily::Logistic => "logistic",
            EdgeFamily::Poisson => "poisson",
            EdgeFamily::Probit => "probit",
        }
    }

    pub fn support(self) -> Support {
        match self {
            EdgeFamily::Logistic | EdgeFamily::Probit => Support::Binary,
            EdgeFamily::Poisson => Support::Count,
        }
    }

    /// Expected edge weight `E[a | pi]`.
    pub fn mu(self, pi: f64) -> Result<f64> {
        check_finite(pi)?;
        Ok(self.mean(pi))
    }

    /// First, second and third derivative of `mu` with respect to `pi`.
    pub fn mu_derivs(self, pi: f64) -> Result<MeanDerivs> {
        check_finite(pi)?;
        Ok(self.derivs(pi))
    }

    /// Variance of the edge weight at index `pi`.
    pub fn edge_variance(self, pi: f64) -> Result<f64> {
        check_finite(pi)?;
        Ok(self.variance(pi))
    }

    /// Draws one edge weight. Binary families return 0 or 1 with
    /// `P(1) = mu(pi)`; the Poisson family returns a count with mean `e^pi`.
    pub fn sample_edge<R: Rng + ?Sized>(self, pi: f64, rng: &mut R) -> Result<f64> {
        check_finite(pi)?;
        Ok(self.sample(pi, rng))
    }

    pub(crate) fn mean(self, pi: f64) -> f64 {
        let pi = clamp(pi);
        match self {
            EdgeFamily::Logistic => sigmoid(pi),
            EdgeFamily::Poisson => pi.exp(),
            EdgeFamily::Probit => norm_cdf(pi),
        }
    }

    /// `mu(pi)` and `mu'(pi)` in one evaluation.
    #[inline]
    pub(crate) fn mean_d1(self, pi: f64) -> (f64, f64) {
        let pi = clamp(pi);
        match self {
            EdgeFamily::Logistic => {
                let m = sigmoid(pi);
                (m, m * (1.0 - m))
            }
            EdgeFamily::Poisson => {
                let e = pi.exp();
                (e, e)
            }
            EdgeFamily::Probit => (norm_cdf(pi), norm_pdf(pi)),
        }
    }

    pub(crate) fn derivs(self, pi: f64) -> MeanDerivs {
        let pi = clamp(pi);
        match self {
            EdgeFamily::Logistic => {
                let m = sigmoid(pi);
                let d1 = m * (1.0 - m);
                MeanDerivs {
                    d1,
                    d2: d1 * (1.0 - 2.0 * m),
                    d3: d1 * (1.0 - 6.0 * m + 6.0 * m * m),
                }
            }
            EdgeFamily::Poisson => {
                let e = pi.exp();
                MeanDerivs { d1: e, d2: e, d3: e }
            }
            EdgeFamily::Probit => {
                let phi = norm_pdf(pi);
                MeanDerivs {
                    d1: phi,
                    d2: -pi * phi,
                    d3: (pi * pi - 1.0) * phi,
                }
            }
        }
    }

    pub(crate) fn variance(self, pi: f64) -> f64 {
        match self {
            EdgeFamily::Logistic | EdgeFamily::Probit => {
                let m = self.mean(pi);
                m * (1.0 - m)
            }
            EdgeFamily::Poisson => self.mean(pi),
        }
    }

    /// Antiderivative of `mu`. The moment equations are the gradient of
    /// `sum_pairs (a_ij * pi_ij - cumulant(pi_ij))`, which is concave.
    #[inline]
    pub(crate) fn cumulant(self, pi: f64) -> f64 {
        let pi = clamp(pi);
        match self {
            EdgeFamily::Logistic => pi.max(0.0) + (-pi.abs()).exp().ln_1p(),
            EdgeFamily::Poisson => pi.exp(),
            EdgeFamily::Probit => pi * norm_cdf(pi) + norm_pdf(pi),
        }
    }

    pub(crate) fn sample<R: Rng + ?Sized>(self, pi: f64, rng: &mut R) -> f64 {
        match self {
            EdgeFamily::Logistic | EdgeFamily::Probit => {
                let u: f64 = rng.gen();
                if u < self.mean(pi) {
                    1.0
                } else {
                    0.0
                }
            }
            EdgeFamily::Poisson => sample_poisson(self.mean(pi), rng) as f64,
        }
    }
}

impl fmt::Display for EdgeFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EdgeFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "logistic" => Ok(EdgeFamily::Logistic),
            "poisson" => Ok(EdgeFamily::Poisson),
            "probit" => Ok(EdgeFamily::Probit),
            other => Err(Error::Config(format!(
                "unknown family '{other}' (expected logistic, poisson or probit)"
            ))),
        }
    }
}

fn check_finite(pi: f64) -> Result<()> {
    if pi.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("index must be finite, got {pi}")))
    }
}

#[inline]
fn clamp(pi: f64) -> f64 {
    pi.clamp(-PI_CLAMP, PI_CLAMP)
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

fn sample_poisson<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    if lambda <= POISSON_INVERSION_MAX {
        poisson_inversion(lambda, rng)
    } else {
        poisson_ptrs(lambda, rng)
    }
}

/// Sequential search on the CDF.
fn poisson_inversion<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    let u: f64 = rng.gen();
    let mut k = 0u64;
    let mut p = (-lambda).exp();
    let mut cdf = p;
    while u > cdf {
        k += 1;
        p *= lambda / k as f64;
        cdf += p;
        // Guard against the tail underflowing before `cdf` reaches `u`.
        if p <= 0.0 && cdf < u {
            break;
        }
    }
    k
}

/// Transformed rejection with squeeze (Hormann's PTRS). Exact for any mean
/// above roughly 10.
fn poisson_ptrs<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    let slam = lambda.sqrt();
    let loglam = lambda.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u: f64 = rng.gen::<f64>() - 0.5;
        let v: f64 = rng.gen();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + lambda + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        let rhs = -lambda + k * loglam - ln_gamma(k + 1.0);
        if lhs <= rhs {
            return k as u64;
        }
    }
}
