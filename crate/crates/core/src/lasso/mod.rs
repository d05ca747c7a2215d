//! L1-penalized regression over term contributions.
//!
//! Solves, for each `lambda` on a decreasing grid,
//!
//! ```text
//! gaussian:  (1/2n) sum_i (y_i - o_i - b0 - x_i.b)^2          + lambda * sum_j |b_j|
//! binomial:  (1/n)  sum_i [log(1 + e^eta_i) - y_i * eta_i]     + lambda * sum_j |b_j|
//!            eta_i = o_i + b0 + x_i.b
//! ```
//!
//! by cyclic coordinate descent with soft-thresholding (binomial wraps the
//! same solver in an iteratively reweighted least-squares loop). The
//! intercept `b0` is never penalized or constrained; with `positive` set,
//! every `b_j` is kept `>= 0`. The offset `o` is optional and never fit.

mod export;
mod kkt;
mod problem;
mod solver;

use serde::{Deserialize, Serialize};

use crate::family::Family;
use crate::scalar::Scalar;

pub use export::write_path_csv;
pub use kkt::kkt_check;
pub use solver::{fit_at_lambda, lambda_grid, lasso_path};

/// Soft-thresholding operator `sign(z) * max(|z| - gamma, 0)`.
pub fn soft_threshold<T: Scalar>(z: T, gamma: T) -> T {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        T::zero()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoConfig<T> {
    pub family: Family,
    /// Constrain every non-intercept coefficient to be `>= 0`.
    pub positive: bool,
    pub n_lambda: usize,
    /// Smallest grid value as a fraction of `lambda_max`. `None` picks `1e-4`
    /// when there are more rows than columns and `1e-2` otherwise.
    pub lambda_min_ratio: Option<f64>,
    /// Penalize coefficients of unit-variance columns; results are reported
    /// on the original column scale.
    pub standardize: bool,
    /// Fixed per-row addend to the linear predictor.
    pub offset: Option<Vec<T>>,
    /// Coordinate-change and KKT tolerance.
    pub tol: f64,
    /// Cap on coordinate sweeps per fit.
    pub max_iter: usize,
}

impl<T> Default for LassoConfig<T> {
    fn default() -> Self {
        LassoConfig {
            family: Family::Gaussian,
            positive: true,
            n_lambda: 100,
            lambda_min_ratio: None,
            standardize: false,
            offset: None,
            tol: 1e-7,
            max_iter: 100_000,
        }
    }
}

impl<T> LassoConfig<T> {
    pub fn resolved_min_ratio(&self, n_rows: usize, n_cols: usize) -> f64 {
        self.lambda_min_ratio
            .unwrap_or(if n_rows > n_cols { 1e-4 } else { 1e-2 })
    }
}

/// Solution at a single `lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit<T> {
    pub coefs: Vec<T>,
    pub intercept: T,
    pub converged: bool,
    /// Coordinate sweeps used.
    pub iterations: usize,
}

/// Solutions along a decreasing `lambda` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoPath<T> {
    pub names: Vec<String>,
    pub lambdas: Vec<T>,
    /// `coefs[k][j]`: coefficient of column `j` at `lambdas[k]`.
    pub coefs: Vec<Vec<T>>,
    pub intercepts: Vec<T>,
    /// Nonzero coefficients per `lambda`.
    pub df: Vec<usize>,
    pub converged: Vec<bool>,
}

impl<T: Scalar> LassoPath<T> {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }
}
