//! Oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use netmoment::{EdgeFamily, NetworkData};

/// Joint Newton on the full degree-plus-covariate system, written
/// independently of the library.
pub struct Oracle<'a> {
    pub n: usize,
    pub p: usize,
    pub family: EdgeFamily,
    pub w: &'a [f64],
    pub z: &'a [f64],
}

impl Oracle<'_> {
    fn mean(&self, x: f64) -> (f64, f64) {
        match self.family {
            EdgeFamily::Logistic => {
                let m = 1.0 / (1.0 + (-x).exp());
                (m, m * (1.0 - m))
            }
            _ => (x.exp(), x.exp()),
        }
    }

    fn system(&self, theta: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let (n, p) = (self.n, self.p);
        let mut g = DVector::zeros(n + p);
        let mut jac = DMatrix::zeros(n + p, n + p);
        let mut k = 0;
        for i in 1..n {
            for j in 0..i {
                let z = &self.z[k * p..(k + 1) * p];
                let x = theta[i] + theta[j] + (0..p).map(|c| z[c] * theta[n + c]).sum::<f64>();
                let (mu, d1) = self.mean(x);
                let r = self.w[k] - mu;
                g[i] += r;
                g[j] += r;
                let mut grad = vec![0.0; n + p];
                grad[i] = 1.0;
                grad[j] = 1.0;
                grad[n..].copy_from_slice(z);
                for c in 0..p {
                    g[n + c] += z[c] * r;
                }
                for (row, weight) in [(i, 1.0), (j, 1.0)].into_iter().chain((0..p).map(|c| (n + c, z[c]))) {
                    for col in 0..n + p {
                        jac[(row, col)] -= weight * d1 * grad[col];
                    }
                }
                k += 1;
            }
        }
        (g, jac)
    }

    pub fn solve(&self) -> Option<Vec<f64>> {
        let mut theta = vec![0.0; self.n + self.p];
        for _ in 0..200 {
            let (g, jac) = self.system(&theta);
            let norm = g.amax();
            if norm < 1e-13 {
                // A vanishing residual far from the origin means the system
                // has no finite root and Newton is walking off to infinity.
                return theta.iter().all(|t| t.abs() < 8.0).then_some(theta);
            }
            let step = jac.lu().solve(&(-&g))?;
            let mut t = 1.0;
            loop {
                let trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(a, s)| a + t * s).collect();
                if self.system(&trial).0.amax() < norm || t < 1e-10 {
                    theta = trial;
                    break;
                }
                t *= 0.5;
            }
        }
        None
    }
}

pub fn logistic_loglik_gradient(data: &NetworkData, theta: &[f64]) -> f64 {
    let (n, p) = (data.n(), data.p());
    let mut g = vec![0.0; n + p];
    for i in 0..n {
        for j in 0..i {
            let z = data.covariate(i, j);
            let x = theta[i] + theta[j] + (0..p).map(|c| z[c] * theta[n + c]).sum::<f64>();
            let r = data.weight(i, j) - 1.0 / (1.0 + (-x).exp());
            g[i] += r;
            g[j] += r;
            for c in 0..p {
                g[n + c] += z[c] * r;
            }
        }
    }
    g.iter().fold(0.0, |a, v| a.max(v.abs()))
}

