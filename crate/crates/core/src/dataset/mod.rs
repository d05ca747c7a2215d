//! Tabular data: columns, targets, splitting and discretization.

mod bins;
mod csv_io;
mod split;

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::family::Family;

pub use bins::{apply_bins, build_bins, BinKind, BinSpec, BinnedMatrix, FeatureBins};
pub use csv_io::{ingest_csv, CsvOptions, Delimiter};
pub use split::{split_by_indicator, split_random};

/// Raw values of one feature.
#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    /// Real values; `NaN` marks a missing cell.
    Continuous(Vec<f64>),
    /// Category labels; `None` marks a missing cell.
    Categorical(Vec<Option<String>>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Continuous(v) => v.len(),
            Column::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self, Column::Categorical(_))
    }

    fn select(&self, rows: &[usize]) -> Column {
        match self {
            Column::Continuous(v) => Column::Continuous(rows.iter().map(|&r| v[r]).collect()),
            Column::Categorical(v) => {
                Column::Categorical(rows.iter().map(|&r| v[r].clone()).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feature {
    pub name: String,
    pub column: Column,
}

impl Feature {
    pub fn continuous(name: impl Into<String>, values: Vec<f64>) -> Self {
        Feature {
            name: name.into(),
            column: Column::Continuous(values),
        }
    }

    pub fn categorical<S: Into<String>>(
        name: impl Into<String>,
        values: impl IntoIterator<Item = Option<S>>,
    ) -> Self {
        Feature {
            name: name.into(),
            column: Column::Categorical(values.into_iter().map(|v| v.map(Into::into)).collect()),
        }
    }
}

/// Column-oriented feature table plus a real-valued target.
///
/// Immutable once built; all columns have `n_rows` entries and names are
/// unique and non-empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<Feature>,
    target: Vec<f64>,
}

impl Dataset {
    pub fn new(features: Vec<Feature>, target: Vec<f64>) -> Result<Self> {
        let n_rows = target.len();
        let mut seen = HashSet::with_capacity(features.len());
        for f in &features {
            if f.name.is_empty() {
                return Err(Error::InvalidData("empty column name".into()));
            }
            if !seen.insert(f.name.as_str()) {
                return Err(Error::InvalidData(format!(
                    "duplicate column name `{}`",
                    f.name
                )));
            }
            if f.column.len() != n_rows {
                return Err(Error::InvalidData(format!(
                    "column `{}` has {} entries, target has {}",
                    f.name,
                    f.column.len(),
                    n_rows
                )));
            }
        }
        Ok(Dataset { features, target })
    }

    pub fn n_rows(&self) -> usize {
        self.target.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn feature(&self, name: &str) -> Option<&Feature> {
        self.features.iter().find(|f| f.name == name)
    }

    pub fn feature_names(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(|f| f.name.as_str())
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    /// Checks the target against the family: binomial targets must be 0/1,
    /// and every target must be finite.
    pub fn validate_target(&self, family: Family) -> Result<()> {
        if let Some(i) = self.target.iter().position(|y| !y.is_finite()) {
            return Err(Error::InvalidData(format!(
                "target value at row {i} is not finite"
            )));
        }
        if family == Family::Binomial {
            if let Some((i, y)) = self
                .target
                .iter()
                .enumerate()
                .find(|(_, &y)| y != 0.0 && y != 1.0)
            {
                return Err(Error::InvalidData(format!(
                    "binomial target must be 0 or 1, found {y} at row {i}"
                )));
            }
        }
        Ok(())
    }

    /// Rows in the given order (indices may repeat).
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            features: self
                .features
                .iter()
                .map(|f| Feature {
                    name: f.name.clone(),
                    column: f.column.select(rows),
                })
                .collect(),
            target: rows.iter().map(|&r| self.target[r]).collect(),
        }
    }

    /// Removes a feature column, returning it alongside the remaining data.
    pub fn take_feature(mut self, name: &str) -> Result<(Dataset, Feature)> {
        let idx = self
            .features
            .iter()
            .position(|f| f.name == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
        let feat = self.features.remove(idx);
        Ok((self, feat))
    }
}
