//! Network data: symmetric edge weights, pair covariates and degrees.
//!
//! Both weights and covariates are stored densely over unordered pairs. The
//! pair `(i, j)` with `i > j` lives at offset `i * (i - 1) / 2 + j`, the
//! row-major order of the strict lower triangle.

use crate::edge_models::{EdgeFamily, Support};
use crate::error::{Error, Result};

/// Offset of the unordered pair `{i, j}` in pair-indexed storage.
#[inline]
pub fn pair_index(i: usize, j: usize) -> usize {
    debug_assert_ne!(i, j);
    let (hi, lo) = if i > j { (i, j) } else { (j, i) };
    hi * (hi - 1) / 2 + lo
}

pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Unordered pairs `(i, j)`, `i > j`, in storage order.
pub fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (1..n).flat_map(|i| (0..i).map(move |j| (i, j)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkData {
    n: usize,
    p: usize,
    weights: Vec<f64>,
    covariates: Vec<f64>,
    degrees: Vec<f64>,
}

impl NetworkData {
    /// `weights` holds one entry per unordered pair and `covariates` holds
    /// `p` consecutive entries per pair, both in storage order.
    pub fn new(n: usize, p: usize, weights: Vec<f64>, covariates: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidData(format!("need at least 2 nodes, got {n}")));
        }
        if p == 0 {
            return Err(Error::InvalidData("covariate dimension must be at least 1".into()));
        }
        let m = pair_count(n);
        if weights.len() != m {
            return Err(Error::InvalidData(format!(
                "expected {m} pair weights for n = {n}, got {}",
                weights.len()
            )));
        }
        if covariates.len() != m * p {
            return Err(Error::InvalidData(format!(
                "expected {} covariate entries ({m} pairs x p = {p}), got {}",
                m * p,
                covariates.len()
            )));
        }
        if let Some(k) = weights.iter().position(|w| !w.is_finite()) {
            let (i, j) = pairs(n).nth(k).unwrap();
            return Err(Error::InvalidData(format!("non-finite weight on pair ({i}, {j})")));
        }
        if let Some(k) = covariates.iter().position(|z| !z.is_finite()) {
            let (i, j) = pairs(n).nth(k / p).unwrap();
            return Err(Error::InvalidData(format!("non-finite covariate on pair ({i}, {j})")));
        }
        let degrees = compute_degrees(n, &weights);
        Ok(NetworkData { n, p, weights, covariates, degrees })
    }

    /// Builds data from closures over unordered pairs `(i, j)` with `i > j`.
    pub fn from_fn<W, Z>(n: usize, p: usize, mut weight: W, mut covariate: Z) -> Result<Self>
    where
        W: FnMut(usize, usize) -> f64,
        Z: FnMut(usize, usize, usize) -> f64,
    {
        let mut weights = Vec::with_capacity(pair_count(n));
        let mut covs = Vec::with_capacity(pair_count(n) * p);
        for (i, j) in pairs(n) {
            weights.push(weight(i, j));
            for k in 0..p {
                covs.push(covariate(i, j, k));
            }
        }
        Self::new(n, p, weights, covs)
    }

    /// Same covariates, new weights.
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        Self::new(self.n, self.p, weights, self.covariates.clone())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Covariate dimension.
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn num_pairs(&self) -> usize {
        self.weights.len()
    }

    /// Edge weight `a_ij`; zero on the diagonal.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        if i == j {
            0.0
        } else {
            self.weights[pair_index(i, j)]
        }
    }

    pub fn covariate(&self, i: usize, j: usize) -> &[f64] {
        self.pair_covariate(pair_index(i, j))
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn covariates(&self) -> &[f64] {
        &self.covariates
    }

    #[inline]
    pub fn pair_covariate(&self, k: usize) -> &[f64] {
        &self.covariates[k * self.p..(k + 1) * self.p]
    }

    /// Degree sequence `d_i = sum_{j != i} a_ij`.
    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    /// Rejects weights outside the range of the family's mean: `[0, 1]` for
    /// binary families, `[0, inf)` for counts. Fractional weights are allowed
    /// so that exact expected values can be fitted.
    pub fn check_support(&self, family: EdgeFamily) -> Result<()> {
        let bad = |w: f64| match family.support() {
            Support::Binary => !(0.0..=1.0).contains(&w),
            Support::Count => w < 0.0,
        };
        if let Some(k) = self.weights.iter().position(|&w| bad(w)) {
            let (i, j) = pairs(self.n).nth(k).unwrap();
            return Err(Error::InvalidData(format!(
                "weight {} on pair ({i}, {j}) is outside the {family} support",
                self.weights[k]
            )));
        }
        Ok(())
    }

    /// True when every weight is an integer in the family's support.
    pub fn is_integral(&self, family: EdgeFamily) -> bool {
        self.weights.iter().all(|&w| {
            w.fract() == 0.0
                && match family.support() {
                    Support::Binary => w == 0.0 || w == 1.0,
                    Support::Count => w >= 0.0,
                }
        })
    }

    /// Nodes whose degree lies on the boundary of its achievable range. The
    /// moment equations have no finite root when this is non-empty.
    pub fn degenerate_nodes(&self, family: EdgeFamily) -> Vec<usize> {
        let full = (self.n - 1) as f64;
        self.degrees
            .iter()
            .enumerate()
            .filter(|(_, &d)| match family.support() {
                Support::Binary => d <= 0.0 || d >= full,
                Support::Count => d <= 0.0,
            })
            .map(|(i, _)| i)
            .collect()
    }
}

fn compute_degrees(n: usize, weights: &[f64]) -> Vec<f64> {
    let mut d = vec![0.0; n];
    for ((i, j), &w) in pairs(n).zip(weights) {
        d[i] += w;
        d[j] += w;
    }
    d
}

/// `kappa_n = max_{i,j} ||z_ij||_inf`.
pub fn kappa_n(data: &NetworkData) -> Result<f64> {
    if data.covariates.is_empty() {
        return Err(Error::InvalidData("no covariates".into()));
    }
    Ok(data.covariates.iter().fold(0.0_f64, |acc, z| acc.max(z.abs())))
}

/// Degree sequence as an owned vector.
pub fn degrees(data: &NetworkData) -> Vec<f64> {
    data.degrees.clone()
}
