use std::io::Write;

use super::LassoPath;
use crate::error::Result;
use crate::scalar::Scalar;

/// Writes one row per `lambda`: `lambda, df, intercept, coef_<name>...`.
pub fn write_path_csv<T: Scalar, W: Write>(path: &LassoPath<T>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["lambda".to_string(), "df".into(), "intercept".into()];
    header.extend(path.names.iter().map(|n| format!("coef_{n}")));
    w.write_record(&header)?;
    for k in 0..path.len() {
        let mut row = vec![
            path.lambdas[k].to_string(),
            path.df[k].to_string(),
            path.intercepts[k].to_string(),
        ];
        row.extend(path.coefs[k].iter().map(|c| c.to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
