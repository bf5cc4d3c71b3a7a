//! Diagonally balanced matrices with positive off-diagonal entries.
//!
//! `V` belongs to the class `L_n(m, M)` when `v_ii = sum_{j != i} v_ij` and
//! `m <= v_ij <= M` off the diagonal. The negated Jacobian of the degree
//! equations lives in this class, and its inverse is well approximated by
//! `S = diag(1 / v_11, ..., 1 / v_nn)`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};

/// Relative slack allowed on the balance identity, scaled by `n * M_n`.
pub const BALANCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassCheck {
    pub is_member: bool,
    /// Smallest off-diagonal entry.
    pub m_n: f64,
    /// Largest off-diagonal entry.
    pub big_m_n: f64,
}

/// Tests membership in `L_n(m_n, M_n)` and reports the off-diagonal bounds.
pub fn check_balanced_class(v: &DMatrix<f64>) -> Result<ClassCheck> {
    let n = v.nrows();
    if n != v.ncols() || n < 2 {
        return Err(Error::NonSquare { rows: v.nrows(), cols: v.ncols() });
    }
    let mut m_n = f64::INFINITY;
    let mut big_m_n = f64::NEG_INFINITY;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                m_n = m_n.min(v[(i, j)]);
                big_m_n = big_m_n.max(v[(i, j)]);
            }
        }
    }
    let tol = n as f64 * big_m_n.abs() * BALANCE_TOL;
    let balanced = (0..n).all(|i| {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| v[(i, j)]).sum();
        (v[(i, i)] - off).abs() <= tol
    });
    Ok(ClassCheck {
        is_member: m_n > 0.0 && balanced,
        m_n,
        big_m_n,
    })
}

/// Diagonal of `S`, the approximate inverse `diag(1 / v_ii)`.
pub fn diag_inverse_approx(v: &DMatrix<f64>) -> Result<DVector<f64>> {
    if v.nrows() != v.ncols() || v.nrows() == 0 {
        return Err(Error::NonSquare { rows: v.nrows(), cols: v.ncols() });
    }
    let diag = v.diagonal();
    if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::Domain(format!(
            "diagonal entry {i} is {}; S needs a positive diagonal",
            diag[i]
        )));
    }
    Ok(diag.map(|d| 1.0 / d))
}

/// A matrix verified to be in `L_n(m_n, M_n)`.
#[derive(Debug, Clone)]
pub struct BalancedMatrix {
    v: DMatrix<f64>,
    m_n: f64,
    big_m_n: f64,
}

impl BalancedMatrix {
    pub fn try_new(v: DMatrix<f64>) -> Result<Self> {
        let check = check_balanced_class(&v)?;
        if !check.is_member {
            return Err(Error::Domain(format!(
                "matrix is not diagonally balanced with positive off-diagonals (min off-diagonal {})",
                check.m_n
            )));
        }
        Ok(BalancedMatrix { v, m_n: check.m_n, big_m_n: check.big_m_n })
    }

    /// Random symmetric member of `L_n(m, M)` with off-diagonals uniform on `[m, M]`.
    pub fn random<R: Rng + ?Sized>(n: usize, m: f64, big_m: f64, rng: &mut R) -> Self {
        assert!(n >= 2 && 0.0 < m && m <= big_m);
        let mut v = DMatrix::zeros(n, n);
        for i in 1..n {
            for j in 0..i {
                let x = if m < big_m { rng.gen_range(m..=big_m) } else { m };
                v[(i, j)] = x;
                v[(j, i)] = x;
            }
        }
        for i in 0..n {
            let off: f64 = v.row(i).iter().sum();
            v[(i, i)] = off;
        }
        BalancedMatrix::try_new(v).expect("constructed member")
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn m_n(&self) -> f64 {
        self.m_n
    }

    pub fn big_m_n(&self) -> f64 {
        self.big_m_n
    }

    pub fn s_approx(&self) -> DVector<f64> {
        self.v.diagonal().map(|d| 1.0 / d)
    }

    /// `max_ij |(V^-1 - S)_ij|` using a dense inverse.
    pub fn approx_error(&self) -> Result<f64> {
        let inv = self
            .v
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Singular("balanced matrix is not invertible".into()))?;
        let s = self.s_approx();
        let n = self.v.nrows();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let sij = if i == j { s[i] } else { 0.0 };
                worst = worst.max((inv[(i, j)] - sij).abs());
            }
        }
        Ok(worst)
    }
}
