//! Pair screening for interaction terms.
//!
//! Each feature is coarsened to at most [`PAIR_GRID`] groups of neighbouring
//! bins; every candidate pair is then scored by how much a table of cell
//! means on the coarse grid reduces the residual sum of squares.

use rayon::prelude::*;

use crate::dataset::BinnedMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Per-feature resolution of the pair grid.
pub const PAIR_GRID: usize = 16;

/// Maps each bin of a feature onto one of at most `max_groups` groups of
/// consecutive bins holding roughly equal row counts. Returns the map and
/// the number of groups used.
pub(crate) fn coarse_map(counts: &[usize], max_groups: usize) -> (Vec<u16>, usize) {
    if counts.len() <= max_groups {
        return ((0..counts.len() as u16).collect(), counts.len());
    }
    let total: usize = counts.iter().sum();
    let mut map = Vec::with_capacity(counts.len());
    let mut group = 0usize;
    let mut cum = 0usize;
    for &c in counts {
        map.push(group as u16);
        cum += c;
        if group + 1 < max_groups && c > 0 && cum * max_groups >= (group + 1) * total {
            group += 1;
        }
    }
    let n_groups = map.last().map_or(0, |&g| g as usize + 1);
    (map, n_groups)
}

pub(crate) fn bin_counts(binned: &BinnedMatrix, feature: usize) -> Vec<usize> {
    let mut counts = vec![0usize; binned.n_bins(feature)];
    for &b in binned.column(feature) {
        counts[b as usize] += 1;
    }
    counts
}

/// Coarse grid for one feature: bin map plus group count.
#[derive(Debug, Clone)]
pub(crate) struct CoarseAxis {
    pub map: Vec<u16>,
    pub n_groups: usize,
}

impl CoarseAxis {
    pub fn from_binned(binned: &BinnedMatrix, feature: usize) -> Self {
        let (map, n_groups) = coarse_map(&bin_counts(binned, feature), PAIR_GRID);
        CoarseAxis { map, n_groups }
    }
}

/// RSS reduction of every feature pair, strongest first. Exact ties keep
/// lexicographic pair order.
pub fn pair_strengths<T: Scalar>(
    binned: &BinnedMatrix,
    residuals: &[T],
) -> Result<Vec<((usize, usize), T)>> {
    let p = binned.n_features();
    if p < 2 {
        return Err(Error::InvalidArgument(format!(
            "pair ranking needs at least 2 features, got {p}"
        )));
    }
    if residuals.len() != binned.n_rows() {
        return Err(Error::InvalidArgument(format!(
            "{} residuals for {} rows",
            residuals.len(),
            binned.n_rows()
        )));
    }
    if residuals.iter().any(|r| !r.is_finite()) {
        return Err(Error::InvalidData("non-finite residual".into()));
    }

    let axes: Vec<CoarseAxis> = (0..p).map(|f| CoarseAxis::from_binned(binned, f)).collect();
    let coarse: Vec<Vec<u16>> = (0..p)
        .map(|f| {
            binned
                .column(f)
                .iter()
                .map(|&b| axes[f].map[b as usize])
                .collect()
        })
        .collect();
    let n = T::from_count(residuals.len());
    let total: T = residuals.iter().copied().sum();
    let baseline = if residuals.is_empty() {
        T::zero()
    } else {
        total * total / n
    };

    let mut scored: Vec<((usize, usize), T)> = (0..p)
        .into_par_iter()
        .flat_map_iter(|i| {
            let coarse = &coarse;
            let axes = &axes;
            (i + 1..p).map(move |j| {
                let width = axes[j].n_groups;
                let cells = axes[i].n_groups * width;
                let mut sums = vec![T::zero(); cells];
                let mut counts = vec![0usize; cells];
                for ((&a, &b), &r) in coarse[i].iter().zip(&coarse[j]).zip(residuals) {
                    let c = a as usize * width + b as usize;
                    sums[c] += r;
                    counts[c] += 1;
                }
                let explained: T = sums
                    .iter()
                    .zip(&counts)
                    .filter(|(_, &c)| c > 0)
                    .map(|(&s, &c)| s * s / T::from_count(c))
                    .sum();
                ((i, j), (explained - baseline).max(T::zero()))
            })
        })
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    Ok(scored)
}

/// The `top_k` feature pairs whose coarse 2D cell-mean fit most reduces the
/// residual sum of squares.
pub fn rank_pairs<T: Scalar>(
    binned: &BinnedMatrix,
    residuals: &[T],
    top_k: usize,
) -> Result<Vec<(usize, usize)>> {
    let p = binned.n_features();
    let n_pairs = p * p.saturating_sub(1) / 2;
    if top_k > n_pairs && p >= 2 {
        return Err(Error::InvalidArgument(format!(
            "requested {top_k} pairs, only {n_pairs} exist"
        )));
    }
    let scored = pair_strengths(binned, residuals)?;
    Ok(scored
        .into_iter()
        .take(top_k)
        .map(|(pair, _)| pair)
        .collect())
}
