//! Held-out evaluation: squared error, binomial deviance, AUROC and top-k
//! capture. Inputs are any [`Scalar`]; values are reported as `f64`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Probabilities are clipped to `[PROB_CLIP, 1 - PROB_CLIP]` before taking logs.
pub const PROB_CLIP: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricValue {
    pub name: String,
    pub value: f64,
    pub n: usize,
}

impl MetricValue {
    pub fn new(name: impl Into<String>, value: f64, n: usize) -> Self {
        MetricValue {
            name: name.into(),
            value,
            n,
        }
    }
}

fn check_pair(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::InvalidArgument(format!(
            "length mismatch: {a} vs {b}"
        )));
    }
    if a == 0 {
        return Err(Error::Empty("metric needs at least one row".into()));
    }
    Ok(())
}

pub fn mse<T: Scalar>(y: &[T], yhat: &[T]) -> Result<f64> {
    check_pair(y.len(), yhat.len())?;
    let total: f64 = y
        .iter()
        .zip(yhat)
        .map(|(&a, &b)| (a.as_f64() - b.as_f64()).powi(2))
        .sum();
    Ok(total / y.len() as f64)
}

/// Twice the mean negative Bernoulli log-likelihood.
pub fn deviance<T: Scalar>(y: &[T], p: &[T]) -> Result<f64> {
    Ok(2.0 * log_loss(y, p)?)
}

pub fn log_loss<T: Scalar>(y: &[T], p: &[T]) -> Result<f64> {
    check_pair(y.len(), p.len())?;
    let total: f64 = y
        .iter()
        .zip(p)
        .map(|(&yi, &pi)| {
            let pi = pi.as_f64().clamp(PROB_CLIP, 1.0 - PROB_CLIP);
            let yi = yi.as_f64();
            -(yi * pi.ln() + (1.0 - yi) * (1.0 - pi).ln())
        })
        .sum();
    Ok(total / y.len() as f64)
}

fn positives<T: Scalar>(y: &[T]) -> Result<Vec<bool>> {
    y.iter()
        .map(|&v| {
            let v = v.as_f64();
            if v == 1.0 {
                Ok(true)
            } else if v == 0.0 {
                Ok(false)
            } else {
                Err(Error::InvalidData(format!("label {v} is not 0 or 1")))
            }
        })
        .collect()
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half (the Mann-Whitney statistic).
pub fn auroc<T: Scalar>(y: &[T], scores: &[T]) -> Result<f64> {
    check_pair(y.len(), scores.len())?;
    let labels = positives(y)?;
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::InvalidData("AUROC needs both classes".into()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidData("NaN score".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());

    // sum of mid-ranks (1-based) of the positives
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += mid * order[i..=j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j + 1;
    }
    let (np, nn) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum - np * (np + 1.0) / 2.0) / (np * nn))
}

/// Positives among the `k` highest scores; ties keep original row order.
pub fn top_k_capture<T: Scalar>(y: &[T], scores: &[T], k: usize) -> Result<usize> {
    check_pair(y.len(), scores.len())?;
    if k > y.len() {
        return Err(Error::InvalidArgument(format!(
            "k={k} exceeds the {} rows",
            y.len()
        )));
    }
    let labels = positives(y)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(order[..k].iter().filter(|&&i| labels[i]).count())
}
