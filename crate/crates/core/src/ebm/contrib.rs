use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Per-row, per-term contributions on the link scale, stored column-major.
///
/// Column `j` holds term `j`'s score for every row, so a row's sum plus the
/// model intercept reproduces the model's link-scale prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct ContribMatrix<T> {
    n_rows: usize,
    names: Vec<String>,
    columns: Vec<Vec<T>>,
}

impl<T: Scalar> ContribMatrix<T> {
    pub fn new(n_rows: usize, names: Vec<String>, columns: Vec<Vec<T>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::InvalidArgument(format!(
                "{} column names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        if let Some(j) = columns.iter().position(|c| c.len() != n_rows) {
            return Err(Error::InvalidData(format!(
                "column `{}` has {} rows, expected {n_rows}",
                names[j],
                columns[j].len()
            )));
        }
        Ok(ContribMatrix {
            n_rows,
            names,
            columns,
        })
    }

    /// Builds a matrix from row-major data with generated column names.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::InvalidData("ragged rows".into()));
        }
        let columns = (0..n_cols)
            .map(|j| rows.iter().map(|r| r[j]).collect())
            .collect();
        let names = (0..n_cols).map(|j| format!("x{j}")).collect();
        Self::new(rows.len(), names, columns)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, j: usize) -> &[T] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<T>] {
        &self.columns
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.columns[col][row]
    }

    /// Sum of the row's contributions, accumulated in column order.
    pub fn row_sum(&self, row: usize) -> T {
        self.columns.iter().fold(T::zero(), |acc, c| acc + c[row])
    }

    /// `X·beta`, accumulated in column order for every row.
    pub fn mul_vec(&self, beta: &[T]) -> Result<Vec<T>> {
        if beta.len() != self.n_cols() {
            return Err(Error::InvalidArgument(format!(
                "coefficient vector has length {}, matrix has {} columns",
                beta.len(),
                self.n_cols()
            )));
        }
        let mut out = vec![T::zero(); self.n_rows];
        for (col, &b) in self.columns.iter().zip(beta) {
            if b == T::zero() {
                continue;
            }
            for (o, &x) in out.iter_mut().zip(col) {
                *o += b * x;
            }
        }
        Ok(out)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        ContribMatrix {
            n_rows: rows.len(),
            names: self.names.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| rows.iter().map(|&r| c[r]).collect())
                .collect(),
        }
    }
}
