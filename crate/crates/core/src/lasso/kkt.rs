use super::problem::Problem;
use super::LassoConfig;
use crate::ebm::ContribMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest violation of the first-order optimality conditions at
/// `(coefs, intercept)`.
///
/// With `g_j` the loss gradient for column `j`: a positive coefficient needs
/// `g_j = -lambda`, a negative one `g_j = lambda`, and a zero one
/// `|g_j| <= lambda` (or `g_j >= -lambda` under positivity). The intercept
/// gradient must vanish. With `standardize` set, conditions are checked on
/// the standardized scale the penalty acts on.
pub fn kkt_check<T: Scalar>(
    x: &ContribMatrix<T>,
    y: &[T],
    lambda: T,
    coefs: &[T],
    intercept: T,
    config: &LassoConfig<T>,
) -> Result<T> {
    let problem = Problem::new(x, y, config)?;
    if coefs.len() != x.n_cols() {
        return Err(Error::InvalidArgument(format!(
            "{} coefficients for {} columns",
            coefs.len(),
            x.n_cols()
        )));
    }
    let beta = problem.to_solver(coefs);
    Ok(problem.kkt(&beta, intercept, lambda))
}
