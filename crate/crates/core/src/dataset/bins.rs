use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Column, Dataset};
use crate::error::{Error, Result};

/// Largest admissible `max_bins`; two extra slots must still fit in a `u16`.
const MAX_BINS_LIMIT: usize = u16::MAX as usize - 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BinKind {
    /// Value bins `0..=cuts.len()`; a value `v` lands in the first bin whose
    /// upper cut satisfies `v <= cut`.
    Continuous {
        #[serde(with = "crate::exact::vec")]
        cuts: Vec<f64>,
    },
    /// One bin per level, then a slot for levels never seen during binning.
    Categorical { levels: Vec<String> },
}

/// Discretization of one feature.
///
/// Bin layout is `[value bins..., (unseen slot), missing slot]`, so every raw
/// value has exactly one bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureBins {
    pub name: String,
    #[serde(flatten)]
    pub kind: BinKind,
}

impl FeatureBins {
    /// Bins that hold observed values (excludes the unseen and missing slots).
    pub fn n_value_bins(&self) -> usize {
        match &self.kind {
            BinKind::Continuous { cuts } => cuts.len() + 1,
            BinKind::Categorical { levels } => levels.len(),
        }
    }

    pub fn n_bins(&self) -> usize {
        self.missing_bin() + 1
    }

    pub fn unseen_bin(&self) -> Option<usize> {
        match &self.kind {
            BinKind::Continuous { .. } => None,
            BinKind::Categorical { levels } => Some(levels.len()),
        }
    }

    pub fn missing_bin(&self) -> usize {
        match &self.kind {
            BinKind::Continuous { cuts } => cuts.len() + 1,
            BinKind::Categorical { levels } => levels.len() + 1,
        }
    }

    fn validate(&self, max_bins: usize) -> Result<()> {
        match &self.kind {
            BinKind::Continuous { cuts } => {
                if cuts.iter().any(|c| !c.is_finite()) || cuts.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::Schema(format!(
                        "cut points of `{}` are not strictly increasing",
                        self.name
                    )));
                }
            }
            BinKind::Categorical { levels } => {
                let mut seen = std::collections::HashSet::new();
                if !levels.iter().all(|l| seen.insert(l)) {
                    return Err(Error::Schema(format!(
                        "duplicate category level in `{}`",
                        self.name
                    )));
                }
            }
        }
        if self.n_value_bins() > max_bins {
            return Err(Error::Schema(format!(
                "`{}` has {} value bins, more than max_bins={max_bins}",
                self.name,
                self.n_value_bins()
            )));
        }
        Ok(())
    }

    fn bin_value(&self, v: f64) -> usize {
        match &self.kind {
            BinKind::Continuous { cuts } => {
                if v.is_nan() {
                    self.missing_bin()
                } else {
                    cuts.partition_point(|&c| c < v)
                }
            }
            BinKind::Categorical { .. } => {
                if v.is_nan() {
                    self.missing_bin()
                } else {
                    self.bin_level(Some(&format!("{v}")))
                }
            }
        }
    }

    fn bin_level(&self, level: Option<&str>) -> usize {
        match (&self.kind, level) {
            (_, None) => self.missing_bin(),
            (BinKind::Categorical { levels }, Some(l)) => {
                levels.iter().position(|x| x == l).unwrap_or(levels.len())
            }
            (BinKind::Continuous { .. }, Some(_)) => unreachable!("checked by caller"),
        }
    }

    fn bin_column(&self, column: &Column) -> Result<Vec<u16>> {
        match (column, &self.kind) {
            (Column::Continuous(v), _) => Ok(v.iter().map(|&x| self.bin_value(x) as u16).collect()),
            (Column::Categorical(v), BinKind::Categorical { levels }) => {
                let lookup: HashMap<&str, usize> = levels
                    .iter()
                    .enumerate()
                    .map(|(i, l)| (l.as_str(), i))
                    .collect();
                Ok(v.iter()
                    .map(|c| match c {
                        None => self.missing_bin(),
                        Some(l) => lookup.get(l.as_str()).copied().unwrap_or(levels.len()),
                    } as u16)
                    .collect())
            }
            (Column::Categorical(_), BinKind::Continuous { .. }) => {
                Err(Error::SchemaMismatch(format!(
                    "feature `{}` is categorical but was binned as continuous",
                    self.name
                )))
            }
        }
    }
}

/// Per-feature discretization, in model feature order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinSpec {
    pub max_bins: usize,
    pub features: Vec<FeatureBins>,
}

impl BinSpec {
    pub fn new(max_bins: usize, features: Vec<FeatureBins>) -> Result<Self> {
        let spec = BinSpec { max_bins, features };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=MAX_BINS_LIMIT).contains(&self.max_bins) {
            return Err(Error::Schema(format!(
                "max_bins={} out of range",
                self.max_bins
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for f in &self.features {
            if !seen.insert(f.name.as_str()) {
                return Err(Error::Schema(format!("duplicate feature `{}`", f.name)));
            }
            f.validate(self.max_bins)?;
        }
        Ok(())
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn n_bins(&self, feature: usize) -> usize {
        self.features[feature].n_bins()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    /// Bins the spec's features out of `data`, in spec order. Extra columns in
    /// `data` are rejected when `strict` is set and ignored otherwise.
    pub(crate) fn bin_dataset(&self, data: &Dataset, strict: bool) -> Result<BinnedMatrix> {
        if strict {
            if let Some(extra) = data
                .feature_names()
                .find(|n| self.feature_index(n).is_none())
            {
                return Err(Error::SchemaMismatch(format!(
                    "feature `{extra}` is not covered by the bin spec"
                )));
            }
        }
        let columns = self
            .features
            .par_iter()
            .map(|fb| {
                let feat = data
                    .feature(&fb.name)
                    .ok_or_else(|| Error::MissingColumn(fb.name.clone()))?;
                fb.bin_column(&feat.column)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BinnedMatrix {
            n_rows: data.n_rows(),
            n_bins: self.features.iter().map(FeatureBins::n_bins).collect(),
            columns,
        })
    }
}

/// Bin index of every cell, stored column-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinnedMatrix {
    n_rows: usize,
    n_bins: Vec<usize>,
    columns: Vec<Vec<u16>>,
}

impl BinnedMatrix {
    /// Builds a matrix directly from bin indices; every entry must be below
    /// its feature's bin count.
    pub fn from_columns(columns: Vec<Vec<u16>>, n_bins: Vec<usize>) -> Result<Self> {
        if columns.len() != n_bins.len() {
            return Err(Error::InvalidArgument(
                "one bin count per column required".into(),
            ));
        }
        let n_rows = columns.first().map_or(0, Vec::len);
        for (j, (col, &nb)) in columns.iter().zip(&n_bins).enumerate() {
            if col.len() != n_rows {
                return Err(Error::InvalidData(format!("column {j} is ragged")));
            }
            if col.iter().any(|&b| b as usize >= nb) {
                return Err(Error::InvalidData(format!(
                    "column {j} has a bin index >= {nb}"
                )));
            }
        }
        Ok(BinnedMatrix {
            n_rows,
            n_bins,
            columns,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn n_bins(&self, feature: usize) -> usize {
        self.n_bins[feature]
    }

    pub fn column(&self, feature: usize) -> &[u16] {
        &self.columns[feature]
    }

    /// Row subset in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> BinnedMatrix {
        BinnedMatrix {
            n_rows: rows.len(),
            n_bins: self.n_bins.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| rows.iter().map(|&r| c[r]).collect())
                .collect(),
        }
    }
}

/// Learns a [`BinSpec`] from `data`.
///
/// Continuous features get cuts at empirical quantiles (midpoints between
/// neighbouring order statistics, duplicates collapsed); a feature with at
/// most `max_bins` distinct values gets a cut between every pair of
/// neighbours. Categorical levels are kept in order of first appearance,
/// capped at the `max_bins` most frequent.
pub fn build_bins(data: &Dataset, max_bins: usize) -> Result<BinSpec> {
    if !(2..=MAX_BINS_LIMIT).contains(&max_bins) {
        return Err(Error::InvalidArgument(format!(
            "max_bins must lie in [2, {MAX_BINS_LIMIT}], got {max_bins}"
        )));
    }
    let features = data
        .features()
        .par_iter()
        .map(|f| FeatureBins {
            name: f.name.clone(),
            kind: match &f.column {
                Column::Continuous(v) => BinKind::Continuous {
                    cuts: quantile_cuts(v, max_bins),
                },
                Column::Categorical(v) => BinKind::Categorical {
                    levels: category_levels(v, max_bins),
                },
            },
        })
        .collect();
    BinSpec::new(max_bins, features)
}

/// Bins every feature of `data` with `spec`. Fails if `data` has a feature
/// the spec does not describe, or lacks one it does.
pub fn apply_bins(data: &Dataset, spec: &BinSpec) -> Result<BinnedMatrix> {
    spec.bin_dataset(data, true)
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo / 2.0 + hi / 2.0;
    if mid >= hi || mid < lo {
        lo
    } else {
        mid
    }
}

fn quantile_cuts(values: &[f64], max_bins: usize) -> Vec<f64> {
    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();
    if distinct.len() <= 1 {
        return Vec::new();
    }
    if distinct.len() <= max_bins {
        return distinct.windows(2).map(|w| midpoint(w[0], w[1])).collect();
    }
    let n = sorted.len();
    let top = sorted[n - 1];
    let mut cuts: Vec<f64> = (1..max_bins)
        .map(|k| {
            let q = k * n / max_bins;
            let (lo, hi) = (sorted[q.max(1) - 1], sorted[q.max(1)]);
            if lo < hi {
                midpoint(lo, hi)
            } else {
                lo
            }
        })
        .filter(|&c| c < top)
        .collect();
    cuts.dedup();
    cuts
}

fn category_levels(values: &[Option<String>], max_bins: usize) -> Vec<String> {
    // (first appearance, count)
    let mut stats: HashMap<&str, (usize, usize)> = HashMap::new();
    for (i, v) in values.iter().enumerate() {
        if let Some(l) = v {
            stats.entry(l.as_str()).or_insert((i, 0)).1 += 1;
        }
    }
    let mut levels: Vec<(&str, usize, usize)> = stats
        .into_iter()
        .map(|(l, (first, n))| (l, first, n))
        .collect();
    if levels.len() > max_bins {
        levels.sort_by(|a, b| b.2.cmp(&a.2).then(a.1.cmp(&b.1)));
        levels.truncate(max_bins);
    }
    levels.sort_by_key(|l| l.1);
    levels.into_iter().map(|l| l.0.to_string()).collect()
}
