use log::warn;

use super::problem::Problem;
use super::{soft_threshold, LassoConfig, LassoFit, LassoPath};
use crate::ebm::ContribMatrix;
use crate::error::{Error, Result};
use crate::family::Family;
use crate::scalar::{inv_logit, Scalar};

/// Weight floor for the binomial working model, from capping fitted
/// probabilities at `[1e-5, 1 - 1e-5]`.
const MIN_WEIGHT: f64 = 1e-5 * (1.0 - 1e-5);
const MAX_IRLS: usize = 200;
const MAX_HALVINGS: usize = 40;

/// Decreasing, log-spaced grid from `lambda_max` down to
/// `lambda_max * lambda_min_ratio`.
pub fn lambda_grid<T: Scalar>(
    x: &ContribMatrix<T>,
    y: &[T],
    config: &LassoConfig<T>,
) -> Result<Vec<T>> {
    let problem = Problem::new(x, y, config)?;
    grid(&problem, config, x.n_cols())
}

fn grid<T: Scalar>(problem: &Problem<'_, T>, config: &LassoConfig<T>, p: usize) -> Result<Vec<T>> {
    if config.n_lambda == 0 {
        return Err(Error::InvalidArgument("n_lambda must be at least 1".into()));
    }
    let ratio = config.resolved_min_ratio(problem.n_rows(), p);
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda_min_ratio must lie in (0, 1), got {ratio}"
        )));
    }
    let lmax = problem.lambda_max()?;
    if config.n_lambda == 1 {
        return Ok(vec![lmax]);
    }
    let log_ratio = T::lit(ratio.ln());
    let last = T::from_count(config.n_lambda - 1);
    Ok((0..config.n_lambda)
        .map(|k| {
            if k == 0 {
                lmax
            } else {
                lmax * (log_ratio * T::from_count(k) / last).exp()
            }
        })
        .collect())
}

/// Solves the penalized problem at one `lambda`, optionally warm-started from
/// `warm` (coefficients on the original column scale).
pub fn fit_at_lambda<T: Scalar>(
    x: &ContribMatrix<T>,
    y: &[T],
    lambda: T,
    warm: Option<&[T]>,
    config: &LassoConfig<T>,
) -> Result<LassoFit<T>> {
    let problem = Problem::new(x, y, config)?;
    if !(lambda >= T::zero() && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be finite and >= 0, got {lambda}"
        )));
    }
    let mut state = match warm {
        Some(w) => {
            if w.len() != x.n_cols() {
                return Err(Error::InvalidArgument(format!(
                    "warm start has {} coefficients for {} columns",
                    w.len(),
                    x.n_cols()
                )));
            }
            let mut beta = problem.to_solver(w);
            if problem.positive {
                for b in &mut beta {
                    *b = b.max(T::zero());
                }
            }
            let b0 = refit_intercept(&problem, &beta);
            State { beta, b0 }
        }
        None => State {
            beta: vec![T::zero(); x.n_cols()],
            b0: problem
                .null_intercept()
                .or_else(|_| Ok::<T, Error>(T::zero()))?,
        },
    };
    let (iterations, converged) = solve(&problem, lambda, &mut state, config);
    if !converged {
        warn!("coordinate descent did not converge at lambda={lambda} after {iterations} sweeps");
    }
    Ok(LassoFit {
        coefs: problem.to_original(&state.beta),
        intercept: state.b0,
        converged,
        iterations,
    })
}

/// Fits the whole regularization path with warm starts.
pub fn lasso_path<T: Scalar>(
    x: &ContribMatrix<T>,
    y: &[T],
    config: &LassoConfig<T>,
) -> Result<LassoPath<T>> {
    let problem = Problem::new(x, y, config)?;
    let lambdas = grid(&problem, config, x.n_cols())?;
    let mut state = State {
        beta: vec![T::zero(); x.n_cols()],
        b0: problem.null_intercept()?,
    };
    let mut path = LassoPath {
        names: x.names().to_vec(),
        lambdas: Vec::with_capacity(lambdas.len()),
        coefs: Vec::with_capacity(lambdas.len()),
        intercepts: Vec::with_capacity(lambdas.len()),
        df: Vec::with_capacity(lambdas.len()),
        converged: Vec::with_capacity(lambdas.len()),
    };
    for (k, &lambda) in lambdas.iter().enumerate() {
        // the null model is exact at lambda_max
        let converged = if k == 0 {
            true
        } else {
            let (sweeps, ok) = solve(&problem, lambda, &mut state, config);
            if !ok {
                warn!("path point {k} (lambda={lambda}) did not converge after {sweeps} sweeps");
            }
            ok
        };
        let coefs = problem.to_original(&state.beta);
        path.df
            .push(coefs.iter().filter(|&&b| b != T::zero()).count());
        path.coefs.push(coefs);
        path.intercepts.push(state.b0);
        path.lambdas.push(lambda);
        path.converged.push(converged);
    }
    Ok(path)
}

#[derive(Clone)]
struct State<T> {
    beta: Vec<T>,
    b0: T,
}

fn refit_intercept<T: Scalar>(problem: &Problem<'_, T>, beta: &[T]) -> T {
    match problem.family {
        Family::Gaussian => {
            let eta = problem.eta(beta, T::zero());
            problem.y.iter().zip(&eta).map(|(&y, &e)| y - e).sum::<T>() / problem.n
        }
        Family::Binomial => problem.null_intercept().unwrap_or(T::zero()),
    }
}

fn solve<T: Scalar>(
    problem: &Problem<'_, T>,
    lambda: T,
    state: &mut State<T>,
    config: &LassoConfig<T>,
) -> (usize, bool) {
    let tol = T::lit(config.tol);
    match problem.family {
        Family::Gaussian => {
            let z: Vec<T> = (0..problem.n_rows())
                .map(|i| problem.y[i] - problem.offset_at(i))
                .collect();
            let mut wls = WeightedLs::new(problem, None, z, state);
            wls.run(lambda, state, tol, config.max_iter)
        }
        Family::Binomial => irls(problem, lambda, state, tol, config.max_iter),
    }
}

/// Iteratively reweighted least squares around the coordinate solver.
// NaN objectives must count as "no progress", hence the negated comparisons.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
fn irls<T: Scalar>(
    problem: &Problem<'_, T>,
    lambda: T,
    state: &mut State<T>,
    tol: T,
    max_sweeps: usize,
) -> (usize, bool) {
    let floor = T::lit(MIN_WEIGHT);
    let mut sweeps = 0;
    let mut objective = problem.objective(&state.beta, state.b0, lambda);
    for _ in 0..MAX_IRLS {
        let eta = problem.eta(&state.beta, state.b0);
        let mut w = Vec::with_capacity(eta.len());
        let mut z = Vec::with_capacity(eta.len());
        for (i, &e) in eta.iter().enumerate() {
            let p = inv_logit(e);
            let wi = (p * (T::one() - p)).max(floor);
            w.push(wi);
            z.push(e - problem.offset_at(i) + (problem.y[i] - p) / wi);
        }
        let previous = state.clone();
        let mut wls = WeightedLs::new(problem, Some(w), z, state);
        let (used, _) = wls.run(lambda, state, tol, max_sweeps.saturating_sub(sweeps).max(1));
        sweeps += used;

        let mut next = problem.objective(&state.beta, state.b0, lambda);
        let mut halvings = 0;
        while !(next <= objective + T::lit(1e-13) * (T::one() + objective.abs()))
            && halvings < MAX_HALVINGS
        {
            let half = T::lit(0.5);
            for (b, &old) in state.beta.iter_mut().zip(&previous.beta) {
                *b = old + half * (*b - old);
            }
            state.b0 = previous.b0 + half * (state.b0 - previous.b0);
            next = problem.objective(&state.beta, state.b0, lambda);
            halvings += 1;
        }
        if !(next <= objective + T::lit(1e-13) * (T::one() + objective.abs())) {
            *state = previous;
            return (sweeps, problem.kkt(&state.beta, state.b0, lambda) <= tol);
        }
        objective = next;

        let change = state
            .beta
            .iter()
            .zip(&previous.beta)
            .map(|(&a, &b)| (a - b).abs())
            .fold((state.b0 - previous.b0).abs(), T::max);
        if change < tol && problem.kkt(&state.beta, state.b0, lambda) <= tol {
            return (sweeps, true);
        }
        if sweeps >= max_sweeps {
            break;
        }
    }
    (sweeps, problem.kkt(&state.beta, state.b0, lambda) <= tol)
}

/// Coordinate descent for
/// `(1/2n) sum_i w_i (z_i - b0 - x_i.b)^2 + lambda * |b|_1`.
struct WeightedLs<'p, 'a, T: Scalar> {
    problem: &'p Problem<'a, T>,
    w: Option<Vec<T>>,
    /// `sum_i w_i x_ij^2 / n`
    curvature: Vec<T>,
    /// `sum_i w_i / n`
    w_mean: T,
    resid: Vec<T>,
}

impl<'p, 'a, T: Scalar> WeightedLs<'p, 'a, T> {
    fn new(problem: &'p Problem<'a, T>, w: Option<Vec<T>>, z: Vec<T>, state: &State<T>) -> Self {
        let n = problem.n;
        let curvature = problem
            .cols
            .iter()
            .zip(&problem.scale)
            .map(|(c, &s)| {
                if s == T::zero() {
                    return T::zero();
                }
                match &w {
                    None => c.iter().map(|&x| x * x).sum::<T>() / n,
                    Some(w) => c.iter().zip(w).map(|(&x, &wi)| wi * x * x).sum::<T>() / n,
                }
            })
            .collect();
        let w_mean = w
            .as_ref()
            .map_or(T::one(), |w| w.iter().copied().sum::<T>() / n);
        let mut resid = z;
        for r in &mut resid {
            *r -= state.b0;
        }
        for (c, &b) in problem.cols.iter().zip(&state.beta) {
            if b != T::zero() {
                for (r, &x) in resid.iter_mut().zip(c.iter()) {
                    *r -= b * x;
                }
            }
        }
        WeightedLs {
            problem,
            w,
            curvature,
            w_mean,
            resid,
        }
    }

    fn weighted_dot(&self, col: &[T]) -> T {
        let s: T = match &self.w {
            None => col.iter().zip(&self.resid).map(|(&x, &r)| x * r).sum(),
            Some(w) => col
                .iter()
                .zip(&self.resid)
                .zip(w)
                .map(|((&x, &r), &wi)| wi * x * r)
                .sum(),
        };
        s / self.problem.n
    }

    fn weighted_mean_resid(&self) -> T {
        let s: T = match &self.w {
            None => self.resid.iter().copied().sum(),
            Some(w) => self.resid.iter().zip(w).map(|(&r, &wi)| wi * r).sum(),
        };
        s / self.problem.n
    }

    /// One pass over `coords` and the intercept; returns the largest
    /// curvature-scaled change.
    fn sweep(&mut self, coords: impl Iterator<Item = usize>, lambda: T, state: &mut State<T>) -> T {
        let mut max_change = T::zero();
        for j in coords {
            let v = self.curvature[j];
            if v == T::zero() {
                continue;
            }
            let old = state.beta[j];
            let z = self.weighted_dot(&self.problem.cols[j]) + v * old;
            let mut new = soft_threshold(z, lambda) / v;
            if self.problem.positive && new < T::zero() {
                new = T::zero();
            }
            if new != old {
                let d = new - old;
                for (r, &x) in self.resid.iter_mut().zip(self.problem.cols[j].iter()) {
                    *r -= d * x;
                }
                state.beta[j] = new;
                max_change = max_change.max(d.abs() * v.sqrt());
            }
        }
        if self.w_mean > T::zero() {
            let d = self.weighted_mean_resid() / self.w_mean;
            if d != T::zero() {
                state.b0 += d;
                for r in &mut self.resid {
                    *r -= d;
                }
                max_change = max_change.max(d.abs() * self.w_mean.sqrt());
            }
        }
        max_change
    }

    /// KKT residual of the weighted subproblem.
    fn kkt(&self, lambda: T, state: &State<T>) -> T {
        let mut worst = self.weighted_mean_resid().abs();
        for j in 0..state.beta.len() {
            if self.curvature[j] == T::zero() {
                continue;
            }
            let g = -self.weighted_dot(&self.problem.cols[j]);
            worst = worst.max(super::problem::coordinate_violation(
                g,
                state.beta[j],
                lambda,
                self.problem.positive,
            ));
        }
        worst
    }

    /// Alternates full sweeps with sweeps restricted to the active set until
    /// a full sweep moves nothing by more than `tol` and the subproblem's
    /// KKT residual is below `tol`.
    fn run(&mut self, lambda: T, state: &mut State<T>, tol: T, max_sweeps: usize) -> (usize, bool) {
        let p = state.beta.len();
        let mut sweeps = 0;
        while sweeps < max_sweeps {
            let change = self.sweep(0..p, lambda, state);
            sweeps += 1;
            if change < tol && self.kkt(lambda, state) <= tol {
                return (sweeps, true);
            }
            let active: Vec<usize> = (0..p).filter(|&j| state.beta[j] != T::zero()).collect();
            while sweeps < max_sweeps {
                let change = self.sweep(active.iter().copied(), lambda, state);
                sweeps += 1;
                if change < tol {
                    break;
                }
            }
        }
        (sweeps, false)
    }
}
