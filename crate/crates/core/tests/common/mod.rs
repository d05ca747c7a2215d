#![allow(dead_code, clippy::needless_range_loop)]

use gam_sparsify::ebm::ContribMatrix;
use gam_sparsify::{Dataset, Feature};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Dense columns as a contribution matrix.
pub fn matrix(cols: Vec<Vec<f64>>) -> ContribMatrix<f64> {
    let n = cols.first().map_or(0, Vec::len);
    let names = (0..cols.len()).map(|j| format!("x{j}")).collect();
    ContribMatrix::new(n, names, cols).unwrap()
}

fn objective(x: &[Vec<f64>], y: &[f64], b0: f64, beta: &[f64], lambda: f64, binomial: bool) -> f64 {
    let n = y.len() as f64;
    let mut loss = 0.0;
    for i in 0..y.len() {
        let eta = b0 + x.iter().zip(beta).map(|(c, b)| c[i] * b).sum::<f64>();
        loss += if binomial {
            eta.max(0.0) + (-eta.abs()).exp().ln_1p() - y[i] * eta
        } else {
            0.5 * (y[i] - eta).powi(2)
        };
    }
    loss / n + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
}

/// Gaussian LASSO by brute force: every active set and sign pattern is
/// solved from its stationarity equations and the one satisfying all
/// optimality conditions (lowest objective on ties) wins.
pub fn gaussian_oracle(x: &[Vec<f64>], y: &[f64], lambda: f64, positive: bool) -> (f64, Vec<f64>) {
    let p = x.len();
    let n = y.len();
    let nf = n as f64;
    let ybar = y.iter().sum::<f64>() / nf;
    let means: Vec<f64> = x.iter().map(|c| c.iter().sum::<f64>() / nf).collect();
    let xc = DMatrix::from_fn(n, p, |i, j| x[j][i] - means[j]);
    let yc = DVector::from_fn(n, |i, _| y[i] - ybar);
    let gram = xc.transpose() * &xc / nf;
    let xty = xc.transpose() * &yc / nf;

    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << p) {
        let active: Vec<usize> = (0..p).filter(|&j| mask >> j & 1 == 1).collect();
        let k = active.len();
        let n_signs = if positive { 1 } else { 1u32 << k };
        for signs in 0..n_signs {
            let s: Vec<f64> = (0..k)
                .map(|a| {
                    if positive || signs >> a & 1 == 0 {
                        1.0
                    } else {
                        -1.0
                    }
                })
                .collect();
            let mut beta = vec![0.0; p];
            if k > 0 {
                let a = DMatrix::from_fn(k, k, |r, c| gram[(active[r], active[c])]);
                let rhs = DVector::from_fn(k, |r, _| xty[active[r]] - lambda * s[r]);
                let Some(sol) = a.lu().solve(&rhs) else {
                    continue;
                };
                if (0..k).any(|r| sol[r] * s[r] <= 0.0) {
                    continue;
                }
                for (r, &j) in active.iter().enumerate() {
                    beta[j] = sol[r];
                }
            }
            let bv = DVector::from_column_slice(&beta);
            let g = &xty - &gram * &bv;
            let slack = 1e-10 * (1.0 + lambda);
            let ok = (0..p).filter(|j| !active.contains(j)).all(|j| {
                if positive {
                    g[j] <= lambda + slack
                } else {
                    g[j].abs() <= lambda + slack
                }
            });
            if !ok {
                continue;
            }
            let b0 = ybar - means.iter().zip(&beta).map(|(m, b)| m * b).sum::<f64>();
            let obj = objective(x, y, b0, &beta, lambda, false);
            if best.as_ref().is_none_or(|(o, _, _)| obj < *o) {
                best = Some((obj, b0, beta));
            }
        }
    }
    let (_, b0, beta) = best.expect("some active set satisfies the optimality conditions");
    (b0, beta)
}

/// Largest violation of the (projected) subgradient conditions of the
/// penalized logistic problem, intercept included.
pub fn binomial_certificate(
    x: &[Vec<f64>],
    y: &[f64],
    lambda: f64,
    positive: bool,
    b0: f64,
    beta: &[f64],
) -> f64 {
    let (g0, g) = logistic_grad(x, y, b0, beta);
    let mut worst = g0.abs();
    for (j, &b) in beta.iter().enumerate() {
        let v = if b > 0.0 {
            (g[j] + lambda).abs()
        } else if b < 0.0 {
            (g[j] - lambda).abs()
        } else if positive {
            (-g[j] - lambda).max(0.0)
        } else {
            (g[j].abs() - lambda).max(0.0)
        };
        worst = worst.max(v);
    }
    worst
}

fn logistic_grad(x: &[Vec<f64>], y: &[f64], b0: f64, beta: &[f64]) -> (f64, Vec<f64>) {
    let n = y.len() as f64;
    let mut g0 = 0.0;
    let mut g = vec![0.0; beta.len()];
    for i in 0..y.len() {
        let eta = b0 + x.iter().zip(beta).map(|(c, b)| c[i] * b).sum::<f64>();
        let r = sigmoid(eta) - y[i];
        g0 += r;
        for (gj, c) in g.iter_mut().zip(x) {
            *gj += r * c[i];
        }
    }
    (g0 / n, g.into_iter().map(|v| v / n).collect())
}

/// Penalized logistic regression by accelerated proximal gradient, then a
/// Newton polish on the identified support with signs held fixed.
pub fn binomial_oracle(x: &[Vec<f64>], y: &[f64], lambda: f64, positive: bool) -> (f64, Vec<f64>) {
    let p = x.len();
    let n = y.len();
    let nf = n as f64;
    let design = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { x[j - 1][i] });
    let lip = 0.25
        * (design.transpose() * &design / nf)
            .symmetric_eigenvalues()
            .max();
    let step = 1.0 / lip;
    let prox = |z: f64| -> f64 {
        let t = step * lambda;
        if z > t {
            z - t
        } else if z < -t && !positive {
            z + t
        } else {
            0.0
        }
    };

    let mut cur = vec![0.0; p + 1];
    let mut prev = cur.clone();
    let mut mom = cur.clone();
    let mut t = 1.0f64;
    for _ in 0..200_000 {
        let (g0, g) = logistic_grad(x, y, mom[0], &mom[1..]);
        let mut next = vec![mom[0] - step * g0];
        next.extend((0..p).map(|j| prox(mom[j + 1] - step * g[j])));
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let delta: f64 = next
            .iter()
            .zip(&cur)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let restart = next
            .iter()
            .zip(&cur)
            .zip(&prev)
            .map(|((a, b), c)| (a - b) * (b - c))
            .sum::<f64>()
            < 0.0;
        prev = std::mem::replace(&mut cur, next);
        if restart {
            t = 1.0;
            mom.clone_from(&cur);
        } else {
            let w = (t - 1.0) / t_next;
            t = t_next;
            mom = cur
                .iter()
                .zip(&prev)
                .map(|(a, b)| a + w * (a - b))
                .collect();
        }
        if delta < 1e-13 {
            break;
        }
    }

    // Newton on the smooth restriction loss + lambda * s'beta_S.
    let support: Vec<usize> = (0..p).filter(|&j| cur[j + 1].abs() > 1e-9).collect();
    let signs: Vec<f64> = support.iter().map(|&j| cur[j + 1].signum()).collect();
    let k = support.len();
    let mut theta: Vec<f64> = std::iter::once(cur[0])
        .chain(support.iter().map(|&j| cur[j + 1]))
        .collect();
    let col = |i: usize, a: usize| if a == 0 { 1.0 } else { x[support[a - 1]][i] };
    for _ in 0..50 {
        let mut grad = DVector::<f64>::zeros(k + 1);
        let mut hess = DMatrix::<f64>::zeros(k + 1, k + 1);
        for i in 0..n {
            let eta: f64 = (0..=k).map(|a| col(i, a) * theta[a]).sum();
            let pr = sigmoid(eta);
            let w = pr * (1.0 - pr);
            for a in 0..=k {
                grad[a] += (pr - y[i]) * col(i, a) / nf;
                for b in 0..=k {
                    hess[(a, b)] += w * col(i, a) * col(i, b) / nf;
                }
            }
        }
        for a in 1..=k {
            grad[a] += lambda * signs[a - 1];
        }
        let Some(d) = hess.lu().solve(&grad) else {
            break;
        };
        for a in 0..=k {
            theta[a] -= d[a];
        }
        if d.amax() < 1e-15 {
            break;
        }
    }
    let mut beta = vec![0.0; p];
    for (a, &j) in support.iter().enumerate() {
        beta[j] = theta[a + 1];
    }
    let polished_ok = support
        .iter()
        .enumerate()
        .all(|(a, _)| theta[a + 1] * signs[a] > 0.0);
    if polished_ok {
        (theta[0], beta)
    } else {
        (cur[0], cur[1..].to_vec())
    }
}

/// Columns `x0..`, each standard normal.
pub fn normal_columns(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Vec<Vec<f64>> {
    (0..p)
        .map(|_| (0..n).map(|_| normal(rng)).collect())
        .collect()
}

pub fn continuous_dataset(cols: Vec<Vec<f64>>, y: Vec<f64>) -> Dataset {
    let features = cols
        .into_iter()
        .enumerate()
        .map(|(j, c)| Feature::continuous(format!("x{j}"), c))
        .collect();
    Dataset::new(features, y).unwrap()
}

/// Five signal features with distinct shapes plus `n_noise` pure-noise
/// features; noise sd chosen so that the signal explains about 70% of the
/// variance. Returns (train, test) with `n` rows each.
pub fn sparse_truth(seed: u64, n: usize, n_noise: usize) -> (Dataset, Dataset) {
    let mut r = rng(seed);
    let p = 5 + n_noise;
    let make = |r: &mut ChaCha8Rng| {
        let cols: Vec<Vec<f64>> = (0..p)
            .map(|_| (0..n).map(|_| r.gen_range(-1.0..1.0)).collect())
            .collect();
        let signal: Vec<f64> = (0..n)
            .map(|i| {
                let x = |j: usize| cols[j][i];
                1.5 * x(0)
                    + (3.0 * x(1)).sin()
                    + 2.0 * x(2).powi(2)
                    + if x(3) > 0.0 { 1.0 } else { -1.0 }
                    + x(4).abs()
            })
            .collect();
        (cols, signal)
    };
    let (train_cols, train_signal) = make(&mut r);
    let (test_cols, test_signal) = make(&mut r);
    let mean = train_signal.iter().sum::<f64>() / n as f64;
    let var = train_signal.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n as f64;
    // R^2 = var / (var + sd^2) = 0.7
    let sd = (var * 0.3 / 0.7).sqrt();
    let mut noisy = |s: Vec<f64>| {
        s.into_iter()
            .map(|v| v + sd * normal(&mut r))
            .collect::<Vec<_>>()
    };
    let y_train = noisy(train_signal);
    let y_test = noisy(test_signal);
    (
        continuous_dataset(train_cols, y_train),
        continuous_dataset(test_cols, y_test),
    )
}

pub struct Instance {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub lambda: f64,
    pub binomial: bool,
    pub positive: bool,
}

/// Small well-posed LASSO problem: `p <= 8`, `2p + 5 <= n <= 50`, lambda
/// a random fraction of the largest useful value.
pub fn random_instance(seed: u64, binomial: bool, positive: bool) -> Instance {
    let mut r = rng(seed);
    let p = r.gen_range(1..=8);
    let n = r.gen_range(2 * p + 5..=50);
    let x = normal_columns(&mut r, n, p);
    let truth: Vec<f64> = (0..p)
        .map(|_| {
            if r.gen_bool(0.5) {
                r.gen_range(-1.5..1.5)
            } else {
                0.0
            }
        })
        .collect();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let eta = 0.3 + (0..p).map(|j| truth[j] * x[j][i]).sum::<f64>();
            if binomial {
                f64::from(r.gen_bool(sigmoid(eta)))
            } else {
                eta + 0.5 * normal(&mut r)
            }
        })
        .collect();
    // largest |<x_j, y - ybar>| / n, the smallest penalty with an all-zero fit
    let ybar = y.iter().sum::<f64>() / n as f64;
    let lmax = x
        .iter()
        .map(|c| {
            let g = c.iter().zip(&y).map(|(a, b)| a * (b - ybar)).sum::<f64>() / n as f64;
            if positive {
                g.max(0.0)
            } else {
                g.abs()
            }
        })
        .fold(0.0, f64::max)
        .max(1e-3);
    let lambda = lmax * r.gen_range(0.05..0.9);
    Instance {
        x,
        y,
        lambda,
        binomial,
        positive,
    }
}
