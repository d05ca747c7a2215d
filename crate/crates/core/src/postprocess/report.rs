use std::io::Write;

use serde::Serialize;

use crate::dataset::Dataset;
use crate::ebm::EbmModel;
use crate::error::{Error, Result};
use crate::family::{Family, Link};
use crate::lasso::LassoPath;
use crate::metrics::{self, MetricValue};
use crate::scalar::{inv_logit, Scalar};

/// Held-out metrics at one point of the LASSO path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathRow {
    pub lambda: f64,
    pub num_terms: usize,
    pub mse: Option<f64>,
    pub deviance: Option<f64>,
    pub auc: Option<f64>,
    pub selected: bool,
}

impl PathRow {
    /// The quantity minimized when choosing `lambda`.
    pub fn selection_metric(&self) -> f64 {
        self.mse.or(self.deviance).unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathReport {
    pub family: Family,
    pub rows: Vec<PathRow>,
}

impl PathReport {
    pub fn selected(&self) -> Option<(usize, &PathRow)> {
        self.rows.iter().enumerate().find(|(_, r)| r.selected)
    }

    fn metric_name(&self) -> &'static str {
        match self.family {
            Family::Gaussian => "mse",
            Family::Binomial => "deviance",
        }
    }

    /// `lambda, num_terms, mse|deviance, auc, selected`; `auc` is empty for
    /// regression.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["lambda", "num_terms", self.metric_name(), "auc", "selected"])?;
        for r in &self.rows {
            w.write_record([
                r.lambda.to_string(),
                r.num_terms.to_string(),
                r.selection_metric().to_string(),
                r.auc.map(|a| a.to_string()).unwrap_or_default(),
                r.selected.to_string(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Test metric against model size, one row per path point.
    pub fn write_metric_vs_terms<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["num_terms", self.metric_name(), "lambda"])?;
        for r in &self.rows {
            w.write_record([
                r.num_terms.to_string(),
                r.selection_metric().to_string(),
                r.lambda.to_string(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Coefficient trajectories in long form: `log_lambda, lambda, term, coef`.
pub fn write_coef_path<T: Scalar, W: Write>(path: &LassoPath<T>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["log_lambda", "lambda", "term", "coef"])?;
    for (k, lambda) in path.lambdas.iter().enumerate() {
        for (name, c) in path.names.iter().zip(&path.coefs[k]) {
            w.write_record([
                lambda.ln().to_string(),
                lambda.to_string(),
                name.clone(),
                c.to_string(),
            ])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Metrics of a fitted model on labelled data: `mse` for regression;
/// `deviance`, `auc` and (when requested) `top_<k>` for classification.
pub fn evaluate_model<T: Scalar>(
    model: &EbmModel<T>,
    data: &Dataset,
    top_k: Option<usize>,
) -> Result<Vec<MetricValue>> {
    let n = data.n_rows();
    let family = model.link().family();
    data.validate_target(family).map_err(|e| {
        Error::SchemaMismatch(format!(
            "{} model cannot score this target: {e}",
            model.link()
        ))
    })?;
    let y: Vec<T> = data.target().iter().map(|&v| T::lit(v)).collect();
    let eta = model.predict(data)?;
    match model.link() {
        Link::Identity => Ok(vec![MetricValue::new("mse", metrics::mse(&y, &eta)?, n)]),
        Link::Logit => {
            let p: Vec<T> = eta.iter().map(|&e| inv_logit(e)).collect();
            let mut out = vec![MetricValue::new("deviance", metrics::deviance(&y, &p)?, n)];
            match metrics::auroc(&y, &p) {
                Ok(a) => out.push(MetricValue::new("auc", a, n)),
                Err(e) => log::warn!("auc skipped: {e}"),
            }
            if let Some(k) = top_k {
                let cap = metrics::top_k_capture(&y, &p, k)?;
                out.push(MetricValue::new(format!("top_{k}"), cap as f64, n));
            }
            Ok(out)
        }
    }
}

/// Metrics in CSV form: `metric, value, n`.
pub fn write_metrics_csv<W: Write>(values: &[MetricValue], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["metric", "value", "n"])?;
    for m in values {
        w.write_record([m.name.clone(), m.value.to_string(), m.n.to_string()])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_csv_layout() {
        let report = PathReport {
            family: Family::Binomial,
            rows: vec![
                PathRow {
                    lambda: 0.5,
                    num_terms: 0,
                    mse: None,
                    deviance: Some(1.2),
                    auc: Some(0.5),
                    selected: false,
                },
                PathRow {
                    lambda: 0.25,
                    num_terms: 3,
                    mse: None,
                    deviance: Some(0.9),
                    auc: Some(0.75),
                    selected: true,
                },
            ],
        };
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "lambda,num_terms,deviance,auc,selected\n0.5,0,1.2,0.5,false\n0.25,3,0.9,0.75,true\n"
        );
        assert_eq!(report.selected().unwrap().0, 1);
        let mut buf = Vec::new();
        report.write_metric_vs_terms(&mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("num_terms,deviance,lambda\n0,1.2,0.5\n"));
    }

    #[test]
    fn metrics_csv() {
        let mut buf = Vec::new();
        write_metrics_csv(&[MetricValue::new("mse", 0.265, 10)], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "metric,value,n\nmse,0.265,10\n"
        );
    }
}
