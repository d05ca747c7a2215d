use std::collections::HashSet;

use crate::dataset::{BinSpec, BinnedMatrix, Dataset};
use crate::error::{Error, Result};
use crate::family::Link;
use crate::scalar::{inv_logit, Scalar};

use super::ContribMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TermKind {
    Main(usize),
    /// Feature indices with `first < second`.
    Pair(usize, usize),
}

/// One shape function: a score per bin (main) or per bin cell (pair).
///
/// Pair tables are row-major: cell `(a, b)` lives at `a * bins(second) + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Term<T> {
    pub kind: TermKind,
    pub scores: Vec<T>,
}

impl<T: Scalar> Term<T> {
    pub fn main(feature: usize, scores: Vec<T>) -> Self {
        Term {
            kind: TermKind::Main(feature),
            scores,
        }
    }

    pub fn pair(first: usize, second: usize, scores: Vec<T>) -> Self {
        Term {
            kind: TermKind::Pair(first, second),
            scores,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.scores.iter().all(|s| *s == T::zero())
    }

    /// Score of each row of `binned` under this term.
    fn lookup(&self, binned: &BinnedMatrix) -> Vec<T> {
        match self.kind {
            TermKind::Main(f) => binned
                .column(f)
                .iter()
                .map(|&b| self.scores[b as usize])
                .collect(),
            TermKind::Pair(f, g) => {
                let width = binned.n_bins(g);
                binned
                    .column(f)
                    .iter()
                    .zip(binned.column(g))
                    .map(|(&a, &b)| self.scores[a as usize * width + b as usize])
                    .collect()
            }
        }
    }
}

/// Additive model `g(E[y]) = intercept + sum_j term_j(x)` over binned
/// features.
#[derive(Debug, Clone, PartialEq)]
pub struct EbmModel<T> {
    intercept: T,
    link: Link,
    bin_spec: BinSpec,
    terms: Vec<Term<T>>,
}

impl<T: Scalar> EbmModel<T> {
    pub fn new(intercept: T, link: Link, bin_spec: BinSpec, terms: Vec<Term<T>>) -> Result<Self> {
        let model = EbmModel {
            intercept,
            link,
            bin_spec,
            terms,
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        let p = self.bin_spec.n_features();
        let mut kinds = HashSet::new();
        for (idx, t) in self.terms.iter().enumerate() {
            let expected = match t.kind {
                TermKind::Main(f) if f < p => self.bin_spec.n_bins(f),
                TermKind::Pair(f, g) if f < g && g < p => {
                    self.bin_spec.n_bins(f) * self.bin_spec.n_bins(g)
                }
                kind => {
                    return Err(Error::InvalidArgument(format!(
                        "term {idx} has invalid feature reference {kind:?}"
                    )))
                }
            };
            if t.scores.len() != expected {
                return Err(Error::InvalidArgument(format!(
                    "term {idx} has {} scores, its bins need {expected}",
                    t.scores.len()
                )));
            }
            if !kinds.insert(t.kind) {
                return Err(Error::InvalidArgument(format!(
                    "term {idx} duplicates {:?}",
                    t.kind
                )));
            }
        }
        Ok(())
    }

    pub fn intercept(&self) -> T {
        self.intercept
    }

    pub fn link(&self) -> Link {
        self.link
    }

    pub fn bin_spec(&self) -> &BinSpec {
        &self.bin_spec
    }

    pub fn terms(&self) -> &[Term<T>] {
        &self.terms
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn term_name(&self, idx: usize) -> String {
        let name = |f: usize| self.bin_spec.features[f].name.as_str();
        match self.terms[idx].kind {
            TermKind::Main(f) => name(f).to_string(),
            TermKind::Pair(f, g) => format!("{} & {}", name(f), name(g)),
        }
    }

    pub fn term_names(&self) -> Vec<String> {
        (0..self.terms.len()).map(|i| self.term_name(i)).collect()
    }

    /// Bins `data` for this model. Columns the model does not use are ignored.
    pub fn bin(&self, data: &Dataset) -> Result<BinnedMatrix> {
        self.bin_spec.bin_dataset(data, false)
    }

    pub fn contributions_binned(&self, binned: &BinnedMatrix) -> ContribMatrix<T> {
        let columns = self.terms.iter().map(|t| t.lookup(binned)).collect();
        ContribMatrix::new(binned.n_rows(), self.term_names(), columns)
            .expect("term lookups have one entry per row")
    }

    /// Link-scale prediction from pre-binned rows.
    pub fn predict_binned(&self, binned: &BinnedMatrix) -> Vec<T> {
        link_scale(self.intercept, &self.contributions_binned(binned))
    }

    /// Link-scale predictions: the response itself for the identity link,
    /// log-odds for the logit link.
    pub fn predict(&self, data: &Dataset) -> Result<Vec<T>> {
        Ok(self.predict_binned(&self.bin(data)?))
    }

    pub fn predict_proba(&self, data: &Dataset) -> Result<Vec<T>> {
        if self.link != Link::Logit {
            return Err(Error::InvalidArgument(format!(
                "predict_proba needs a logit-link model, this one is {}",
                self.link
            )));
        }
        Ok(self.predict(data)?.into_iter().map(inv_logit).collect())
    }

    pub fn predict_and_contrib(&self, data: &Dataset) -> Result<(Vec<T>, ContribMatrix<T>)> {
        let contrib = self.contributions_binned(&self.bin(data)?);
        Ok((link_scale(self.intercept, &contrib), contrib))
    }

    /// Mean absolute contribution of each term over the rows of `data`.
    pub fn term_importances(&self, data: &Dataset) -> Result<Vec<T>> {
        if data.n_rows() == 0 {
            return Err(Error::Empty("importances need at least one row".into()));
        }
        let (_, contrib) = self.predict_and_contrib(data)?;
        let n = T::from_count(data.n_rows());
        Ok(contrib
            .columns()
            .iter()
            .map(|c| c.iter().map(|v| v.abs()).sum::<T>() / n)
            .collect())
    }

    /// Multiplies every entry of one term's score table by `factor`.
    pub fn scale_term(mut self, term_index: usize, factor: T) -> Result<Self> {
        self.scale_term_in_place(term_index, factor)?;
        Ok(self)
    }

    pub fn scale_term_in_place(&mut self, term_index: usize, factor: T) -> Result<()> {
        let n = self.terms.len();
        let term = self.terms.get_mut(term_index).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "term index {term_index} out of range for {n} terms"
            ))
        })?;
        for s in &mut term.scores {
            *s *= factor;
        }
        Ok(())
    }

    pub fn set_intercept(mut self, value: T) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "intercept must be finite, got {value}"
            )));
        }
        self.intercept = value;
        Ok(self)
    }

    /// Drops terms whose score tables are identically zero.
    pub fn sweep(mut self) -> Self {
        self.terms.retain(|t| !t.is_zero());
        self
    }
}

fn link_scale<T: Scalar>(intercept: T, contrib: &ContribMatrix<T>) -> Vec<T> {
    (0..contrib.n_rows())
        .map(|i| intercept + contrib.row_sum(i))
        .collect()
}
