//! Term reweighting of a fitted model with the LASSO.
//!
//! Every term's contribution becomes a regression input; a (by default
//! non-negative) LASSO path is fit on the training rows, the penalty is
//! chosen on the test rows, and the model is edited so that each term is
//! scaled by its coefficient, the intercept replaced and zeroed terms
//! removed.

mod report;

use log::info;

use crate::dataset::Dataset;
use crate::ebm::{fit_ebm, ContribMatrix, EbmModel, TrainConfig};
use crate::error::{Error, Result};
use crate::family::Family;
use crate::lasso::{lasso_path, LassoConfig, LassoPath};
use crate::metrics::{self, MetricValue};
use crate::scalar::{inv_logit, Scalar};

pub use report::{evaluate_model, write_coef_path, write_metrics_csv, PathReport, PathRow};

/// How the original model's intercept enters the LASSO.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InterceptMode {
    /// Drop it and let the LASSO estimate a fresh intercept.
    #[default]
    Reestimate,
    /// Keep it as a fixed offset; the LASSO intercept is added on top.
    Offset,
}

/// Term contributions of `train` and `test`, columns in model term order.
pub fn build_design<T: Scalar>(
    model: &EbmModel<T>,
    train: &Dataset,
    test: &Dataset,
) -> Result<(ContribMatrix<T>, ContribMatrix<T>)> {
    let design = |d: &Dataset| -> Result<ContribMatrix<T>> {
        let binned = model.bin(d).map_err(|e| match e {
            Error::MissingColumn(c) => {
                Error::SchemaMismatch(format!("data lacks model feature `{c}`"))
            }
            other => other,
        })?;
        Ok(model.contributions_binned(&binned))
    };
    Ok((design(train)?, design(test)?))
}

/// Link-scale predictions of path point `k` on `x`.
pub fn path_predictions<T: Scalar>(
    path: &LassoPath<T>,
    k: usize,
    x: &ContribMatrix<T>,
    offset: Option<&[T]>,
) -> Result<Vec<T>> {
    let mut eta = x.mul_vec(&path.coefs[k])?;
    for (i, e) in eta.iter_mut().enumerate() {
        *e += path.intercepts[k] + offset.map_or(T::zero(), |o| o[i]);
    }
    Ok(eta)
}

/// Scores every path point on held-out data.
pub fn evaluate_path<T: Scalar>(
    path: &LassoPath<T>,
    x: &ContribMatrix<T>,
    y: &[T],
    family: Family,
    offset: Option<&[T]>,
) -> Result<Vec<PathRow>> {
    if x.n_rows() == 0 || y.is_empty() {
        return Err(Error::Empty(
            "lambda selection needs a non-empty test set".into(),
        ));
    }
    if y.len() != x.n_rows() {
        return Err(Error::InvalidArgument(format!(
            "{} test responses for {} rows",
            y.len(),
            x.n_rows()
        )));
    }
    (0..path.len())
        .map(|k| {
            let eta = path_predictions(path, k, x, offset)?;
            let mut row = PathRow {
                lambda: path.lambdas[k].as_f64(),
                num_terms: path.df[k],
                mse: None,
                deviance: None,
                auc: None,
                selected: false,
            };
            match family {
                Family::Gaussian => row.mse = Some(metrics::mse(y, &eta)?),
                Family::Binomial => {
                    let p: Vec<T> = eta.into_iter().map(inv_logit).collect();
                    row.deviance = Some(metrics::deviance(y, &p)?);
                    row.auc = metrics::auroc(y, &p).ok();
                }
            }
            Ok(row)
        })
        .collect()
}

/// Index of the smallest metric; exact ties go to the earliest (largest,
/// sparsest) `lambda`. NaN metrics never win.
fn argmin(rows: &[PathRow]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, r) in rows.iter().enumerate() {
        let m = r.selection_metric();
        if m.is_nan() {
            continue;
        }
        if best.is_none_or(|(_, b)| m < b) {
            best = Some((k, m));
        }
    }
    best.map(|(k, _)| k)
}

/// Picks the path point with the smallest test MSE (gaussian) or deviance
/// (binomial).
pub fn select_lambda<T: Scalar>(
    path: &LassoPath<T>,
    x_test: &ContribMatrix<T>,
    y_test: &[T],
    family: Family,
    offset: Option<&[T]>,
) -> Result<(T, usize)> {
    if path.is_empty() {
        return Err(Error::Empty("LASSO path has no points".into()));
    }
    let rows = evaluate_path(path, x_test, y_test, family, offset)?;
    let k = argmin(&rows).ok_or_else(|| Error::Degenerate("every path metric is NaN".into()))?;
    Ok((path.lambdas[k], k))
}

/// Scales each term by its coefficient, installs the new intercept and drops
/// zeroed terms, giving `intercept + sum_j coefs[j] * f_j(x)`.
pub fn apply_coefficients<T: Scalar>(
    model: &EbmModel<T>,
    coefs: &[T],
    intercept: T,
) -> Result<EbmModel<T>> {
    if coefs.len() != model.n_terms() {
        return Err(Error::InvalidArgument(format!(
            "{} coefficients for {} terms",
            coefs.len(),
            model.n_terms()
        )));
    }
    let mut edited = model.clone();
    for (j, &c) in coefs.iter().enumerate() {
        if c != T::one() {
            edited.scale_term_in_place(j, c)?;
        }
    }
    Ok(edited.set_intercept(intercept)?.sweep())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSummary {
    pub n_terms: usize,
    pub test_metric: MetricValue,
}

#[derive(Debug, Clone)]
pub struct PipelineOptions<'a> {
    pub intercept: InterceptMode,
    /// Final validation rows, never used for fitting or selection.
    pub holdout: Option<&'a Dataset>,
}

impl Default for PipelineOptions<'_> {
    fn default() -> Self {
        PipelineOptions {
            intercept: InterceptMode::Reestimate,
            holdout: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineResult<T> {
    pub original_model: EbmModel<T>,
    pub original: ModelSummary,
    pub reduced_model: EbmModel<T>,
    pub reduced: ModelSummary,
    pub path: LassoPath<T>,
    pub report: PathReport,
    pub selected: usize,
    pub lambda: T,
    /// Coefficients and intercept of the selected path point as applied to
    /// the model (offset already folded into the intercept).
    pub coefs: Vec<T>,
    pub intercept: T,
    /// Fraction of terms removed.
    pub reduction_ratio: f64,
    /// `(original, reduced)` metrics on the holdout set, when one was given.
    pub holdout: Option<(MetricValue, MetricValue)>,
}

fn headline<T: Scalar>(model: &EbmModel<T>, data: &Dataset) -> Result<MetricValue> {
    Ok(evaluate_model(model, data, None)?.remove(0))
}

/// Fits a model on `train`, then reweights and prunes its terms.
pub fn run_pipeline<T: Scalar>(
    train: &Dataset,
    test: &Dataset,
    train_config: &TrainConfig,
    lasso_config: &LassoConfig<T>,
    options: &PipelineOptions<'_>,
) -> Result<PipelineResult<T>> {
    if test.n_rows() == 0 {
        return Err(Error::Empty(
            "test set is empty; lambda cannot be selected".into(),
        ));
    }
    let model = fit_ebm(train, train_config, lasso_config.family)?;
    info!("fitted model with {} terms", model.n_terms());
    postprocess_model(&model, train, test, lasso_config, options)
}

/// Post-processes an already fitted model: contribution matrices, LASSO
/// path on `train`, selection on `test`, then model editing.
pub fn postprocess_model<T: Scalar>(
    model: &EbmModel<T>,
    train: &Dataset,
    test: &Dataset,
    lasso_config: &LassoConfig<T>,
    options: &PipelineOptions<'_>,
) -> Result<PipelineResult<T>> {
    let family = lasso_config.family;
    if model.link() != family.link() {
        return Err(Error::SchemaMismatch(format!(
            "{} model cannot be post-processed with the {family} family",
            model.link()
        )));
    }
    if test.n_rows() == 0 {
        return Err(Error::Empty(
            "test set is empty; lambda cannot be selected".into(),
        ));
    }
    train.validate_target(family)?;
    test.validate_target(family)?;

    let (x_train, x_test) = build_design(model, train, test)?;
    let y_train: Vec<T> = train.target().iter().map(|&v| T::lit(v)).collect();
    let y_test: Vec<T> = test.target().iter().map(|&v| T::lit(v)).collect();

    let base = model.intercept();
    let (config, test_offset) = match options.intercept {
        InterceptMode::Reestimate => (lasso_config.clone(), None),
        InterceptMode::Offset => (
            LassoConfig {
                offset: Some(vec![base; train.n_rows()]),
                ..lasso_config.clone()
            },
            Some(vec![base; test.n_rows()]),
        ),
    };
    let path = lasso_path(&x_train, &y_train, &config)?;
    let mut rows = evaluate_path(&path, &x_test, &y_test, family, test_offset.as_deref())?;
    let selected =
        argmin(&rows).ok_or_else(|| Error::Degenerate("every path metric is NaN".into()))?;
    rows[selected].selected = true;

    let coefs = path.coefs[selected].clone();
    let intercept = match options.intercept {
        InterceptMode::Reestimate => path.intercepts[selected],
        InterceptMode::Offset => base + path.intercepts[selected],
    };
    let reduced_model = apply_coefficients(model, &coefs, intercept)?;

    let original = ModelSummary {
        n_terms: model.n_terms(),
        test_metric: headline(model, test)?,
    };
    let reduced = ModelSummary {
        n_terms: reduced_model.n_terms(),
        test_metric: headline(&reduced_model, test)?,
    };
    let holdout = match options.holdout {
        Some(h) => Some((headline(model, h)?, headline(&reduced_model, h)?)),
        None => None,
    };
    let reduction_ratio = if model.n_terms() == 0 {
        0.0
    } else {
        1.0 - reduced_model.n_terms() as f64 / model.n_terms() as f64
    };
    info!(
        "lambda={} kept {} of {} terms",
        path.lambdas[selected],
        reduced_model.n_terms(),
        model.n_terms()
    );
    Ok(PipelineResult {
        original_model: model.clone(),
        original,
        reduced_model,
        reduced,
        lambda: path.lambdas[selected],
        report: PathReport { family, rows },
        path,
        selected,
        coefs,
        intercept,
        reduction_ratio,
        holdout,
    })
}
