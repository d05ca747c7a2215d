use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Column, Dataset};
use crate::error::{Error, Result};

fn parse_flag(cell: &str) -> Option<bool> {
    match cell.to_ascii_lowercase().as_str() {
        "true" | "t" | "yes" | "1" => Some(true),
        "false" | "f" | "no" | "0" => Some(false),
        _ => None,
    }
}

/// Splits rows into `(train, test)` by a boolean-like indicator column, which
/// is dropped from both halves. Rows flagged true go to the test set. Row
/// order is preserved within each part.
pub fn split_by_indicator(data: &Dataset, indicator: &str) -> Result<(Dataset, Dataset)> {
    let feat = data
        .feature(indicator)
        .ok_or_else(|| Error::MissingColumn(indicator.to_string()))?;
    let flags: Vec<bool> = match &feat.column {
        Column::Continuous(v) => v
            .iter()
            .map(|x| match *x {
                0.0 => Some(false),
                1.0 => Some(true),
                _ => None,
            })
            .collect::<Option<_>>(),
        Column::Categorical(v) => v
            .iter()
            .map(|c| c.as_deref().and_then(parse_flag))
            .collect::<Option<_>>(),
    }
    .ok_or_else(|| Error::InvalidData(format!("indicator column `{indicator}` is not boolean")))?;

    let (test_rows, train_rows): (Vec<usize>, Vec<usize>) =
        (0..data.n_rows()).partition(|&i| flags[i]);
    if test_rows.is_empty() {
        return Err(Error::Empty(format!(
            "indicator `{indicator}` selects no test rows"
        )));
    }
    if train_rows.is_empty() {
        return Err(Error::Empty(format!(
            "indicator `{indicator}` selects no training rows"
        )));
    }
    let (rest, _) = data.clone().take_feature(indicator)?;
    Ok((rest.select_rows(&train_rows), rest.select_rows(&test_rows)))
}

/// Seeded random `(train, test)` split with `test_fraction` of rows in test.
pub fn split_random(data: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let n = data.n_rows();
    let n_test = ((n as f64) * test_fraction).round() as usize;
    if n_test == 0 || n_test == n {
        return Err(Error::Empty(format!(
            "a {test_fraction} split of {n} rows leaves one side empty"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut test: Vec<usize> = idx[..n_test].to_vec();
    let mut train: Vec<usize> = idx[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((data.select_rows(&train), data.select_rows(&test)))
}
