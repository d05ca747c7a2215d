use std::borrow::Cow;

use log::warn;

use super::LassoConfig;
use crate::ebm::ContribMatrix;
use crate::error::{Error, Result};
use crate::family::Family;
use crate::scalar::{inv_logit, log1p_exp, Scalar};

/// A LASSO instance in solver coordinates: columns divided by their scale
/// when standardizing, so `beta_solver[j] = beta[j] * scale[j]`.
pub(crate) struct Problem<'a, T: Scalar> {
    pub cols: Vec<Cow<'a, [T]>>,
    /// Column scale; zero marks a column that cannot enter the model.
    pub scale: Vec<T>,
    pub y: &'a [T],
    pub offset: Option<&'a [T]>,
    pub family: Family,
    pub positive: bool,
    pub n: T,
}

impl<'a, T: Scalar> Problem<'a, T> {
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn new(x: &'a ContribMatrix<T>, y: &'a [T], config: &'a LassoConfig<T>) -> Result<Self> {
        let n_rows = x.n_rows();
        if n_rows == 0 {
            return Err(Error::Empty("design matrix has no rows".into()));
        }
        if y.len() != n_rows {
            return Err(Error::InvalidArgument(format!(
                "{} responses for {n_rows} rows",
                y.len()
            )));
        }
        if let Some(o) = &config.offset {
            if o.len() != n_rows {
                return Err(Error::InvalidArgument(format!(
                    "offset has {} entries for {n_rows} rows",
                    o.len()
                )));
            }
            if o.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidData("non-finite offset".into()));
            }
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite response".into()));
        }
        if x.columns().iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite design entry".into()));
        }
        if config.family == Family::Binomial && y.iter().any(|&v| v != T::zero() && v != T::one()) {
            return Err(Error::InvalidData(
                "binomial response must be 0 or 1".into(),
            ));
        }
        if !(config.tol > 0.0) {
            return Err(Error::InvalidArgument("tol must be > 0".into()));
        }

        let n = T::from_count(n_rows);
        let mut cols = Vec::with_capacity(x.n_cols());
        let mut scale = Vec::with_capacity(x.n_cols());
        for c in x.columns() {
            let energy: T = c.iter().map(|&v| v * v).sum();
            if energy == T::zero() {
                cols.push(Cow::Borrowed(c.as_slice()));
                scale.push(T::zero());
            } else if config.standardize {
                let mean = c.iter().copied().sum::<T>() / n;
                let var = c.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
                let sd = var.sqrt();
                if sd > T::zero() {
                    cols.push(Cow::Owned(c.iter().map(|&v| v / sd).collect()));
                    scale.push(sd);
                } else {
                    // constant column: indistinguishable from the intercept
                    cols.push(Cow::Borrowed(c.as_slice()));
                    scale.push(T::zero());
                }
            } else {
                cols.push(Cow::Borrowed(c.as_slice()));
                scale.push(T::one());
            }
        }
        Ok(Problem {
            cols,
            scale,
            y,
            offset: config.offset.as_deref(),
            family: config.family,
            positive: config.positive,
            n,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn offset_at(&self, i: usize) -> T {
        self.offset.map_or(T::zero(), |o| o[i])
    }

    /// Linear predictor for solver-scale coefficients.
    pub fn eta(&self, beta: &[T], b0: T) -> Vec<T> {
        let mut eta: Vec<T> = (0..self.n_rows()).map(|i| self.offset_at(i) + b0).collect();
        for (c, &b) in self.cols.iter().zip(beta) {
            if b != T::zero() {
                for (e, &x) in eta.iter_mut().zip(c.iter()) {
                    *e += b * x;
                }
            }
        }
        eta
    }

    /// Mean response given the linear predictor.
    pub fn mean(&self, eta: T) -> T {
        match self.family {
            Family::Gaussian => eta,
            Family::Binomial => inv_logit(eta),
        }
    }

    /// Unpenalized loss: half mean squared error or mean negative
    /// log-likelihood.
    pub fn loss(&self, eta: &[T]) -> T {
        let total: T = match self.family {
            Family::Gaussian => {
                self.y
                    .iter()
                    .zip(eta)
                    .map(|(&y, &e)| (y - e) * (y - e))
                    .sum::<T>()
                    / T::lit(2.0)
            }
            Family::Binomial => self
                .y
                .iter()
                .zip(eta)
                .map(|(&y, &e)| log1p_exp(e) - y * e)
                .sum(),
        };
        total / self.n
    }

    pub fn objective(&self, beta: &[T], b0: T, lambda: T) -> T {
        let l1: T = beta.iter().map(|b| b.abs()).sum();
        self.loss(&self.eta(beta, b0)) + lambda * l1
    }

    /// Loss gradient `-(1/n) X^T (y - mu)` and its intercept component.
    pub fn gradient(&self, eta: &[T]) -> (Vec<T>, T) {
        let resid: Vec<T> = self
            .y
            .iter()
            .zip(eta)
            .map(|(&y, &e)| y - self.mean(e))
            .collect();
        let g = self
            .cols
            .iter()
            .map(|c| -c.iter().zip(&resid).map(|(&x, &r)| x * r).sum::<T>() / self.n)
            .collect();
        let g0 = -resid.iter().copied().sum::<T>() / self.n;
        (g, g0)
    }

    /// Largest first-order optimality violation, in solver coordinates.
    pub fn kkt(&self, beta: &[T], b0: T, lambda: T) -> T {
        let (g, g0) = self.gradient(&self.eta(beta, b0));
        let mut worst = g0.abs();
        for (j, (&gj, &bj)) in g.iter().zip(beta).enumerate() {
            let v = coordinate_violation(gj, bj, lambda, self.positive);
            let v = if self.scale[j] == T::zero() && bj != T::zero() {
                v.max(bj.abs())
            } else {
                v
            };
            worst = worst.max(v);
        }
        worst
    }

    /// Intercept of the model with every coefficient at zero.
    pub fn null_intercept(&self) -> Result<T> {
        match self.family {
            Family::Gaussian => Ok((0..self.n_rows())
                .map(|i| self.y[i] - self.offset_at(i))
                .sum::<T>()
                / self.n),
            Family::Binomial => {
                let ybar = self.y.iter().copied().sum::<T>() / self.n;
                if ybar <= T::zero() || ybar >= T::one() {
                    return Err(Error::Degenerate(
                        "binomial response has a single class".into(),
                    ));
                }
                let mut b0 = (ybar / (T::one() - ybar)).ln();
                if self.offset.is_some() {
                    // Newton on sum(y - p(o + b0)) = 0
                    for _ in 0..100 {
                        let (mut g, mut h) = (T::zero(), T::zero());
                        for i in 0..self.n_rows() {
                            let p = inv_logit(self.offset_at(i) + b0);
                            g += self.y[i] - p;
                            h += p * (T::one() - p);
                        }
                        if h <= T::zero() {
                            break;
                        }
                        let step = g / h;
                        b0 += step;
                        if step.abs() <= T::epsilon() * (T::one() + b0.abs()) {
                            break;
                        }
                    }
                }
                Ok(b0)
            }
        }
    }

    /// Smallest `lambda` at which every coefficient is zero. When no column
    /// can enter at all (e.g. every correlation is negative under the sign
    /// constraint) the null model solves every `lambda`; the unsigned value
    /// (or 1) is returned so a grid can still be laid out.
    pub fn lambda_max(&self) -> Result<T> {
        let b0 = self.null_intercept()?;
        let zeros = vec![T::zero(); self.n_cols()];
        let eta = self.eta(&zeros, b0);
        if self.family == Family::Gaussian {
            let (mut resid, mut size) = (T::zero(), T::zero());
            for (i, &e) in eta.iter().enumerate() {
                resid = resid.max((self.y[i] - e).abs());
                size = size.max(self.y[i].abs());
            }
            if resid <= T::lit(64.0) * T::epsilon() * (T::one() + size) {
                return Err(Error::Degenerate(
                    "response has zero variance (lambda_max = 0)".into(),
                ));
            }
        }
        let (g, _) = self.gradient(&eta);
        let usable = || g.iter().zip(&self.scale).filter(|(_, &s)| s != T::zero());
        let lmax = usable()
            .map(|(&gj, _)| if self.positive { -gj } else { gj.abs() })
            .fold(T::zero(), T::max);
        if lmax > T::zero() {
            return Ok(lmax);
        }
        warn!("no column can enter the model; every path point is the null model");
        let unsigned = usable().map(|(&gj, _)| gj.abs()).fold(T::zero(), T::max);
        Ok(if unsigned > T::zero() {
            unsigned
        } else {
            T::one()
        })
    }

    pub fn to_original(&self, beta: &[T]) -> Vec<T> {
        beta.iter()
            .zip(&self.scale)
            .map(|(&b, &s)| if s == T::zero() { T::zero() } else { b / s })
            .collect()
    }

    pub fn to_solver(&self, beta: &[T]) -> Vec<T> {
        beta.iter().zip(&self.scale).map(|(&b, &s)| b * s).collect()
    }
}

/// KKT residual of one coordinate with loss gradient `g` and value `b`.
pub(crate) fn coordinate_violation<T: Scalar>(g: T, b: T, lambda: T, positive: bool) -> T {
    if b > T::zero() {
        (g + lambda).abs()
    } else if b < T::zero() {
        let v = (g - lambda).abs();
        if positive {
            v.max(-b)
        } else {
            v
        }
    } else if positive {
        (-g - lambda).max(T::zero())
    } else {
        (g.abs() - lambda).max(T::zero())
    }
}
