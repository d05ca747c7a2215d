use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use super::{Column, Dataset, Feature};
use crate::error::{Error, Result};
use crate::family::Family;

/// Field separator for [`ingest_csv`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delimiter {
    Char(u8),
    /// Any run of spaces or tabs, as in R's `read.table` output.
    Whitespace,
}

impl Default for Delimiter {
    fn default() -> Self {
        Delimiter::Char(b',')
    }
}

impl FromStr for Delimiter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ws" | "whitespace" => Ok(Delimiter::Whitespace),
            "comma" => Ok(Delimiter::Char(b',')),
            "tab" | "\\t" => Ok(Delimiter::Char(b'\t')),
            "semicolon" => Ok(Delimiter::Char(b';')),
            s if s.len() == 1 && s.is_ascii() => Ok(Delimiter::Char(s.as_bytes()[0])),
            other => Err(Error::InvalidArgument(format!(
                "unsupported delimiter `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub delimiter: Delimiter,
    /// Cells equal to one of these (after trimming) are missing.
    pub missing_tokens: Vec<String>,
    /// Binomial requires a 0/1 target.
    pub family: Family,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            delimiter: Delimiter::default(),
            missing_tokens: vec![String::new(), "NA".to_string()],
            family: Family::Gaussian,
        }
    }
}

/// Reads a delimited file with a header row into a [`Dataset`].
///
/// The `target` column becomes the response; every other column is a
/// feature. A feature column is continuous when every non-missing cell parses
/// as a number and categorical otherwise.
pub fn ingest_csv(path: impl AsRef<Path>, target: &str, options: &CsvOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let (header, rows) = match options.delimiter {
        Delimiter::Char(d) => read_delimited(path, d)?,
        Delimiter::Whitespace => read_whitespace(path)?,
    };
    from_records(header, rows, target, options)
}

type Records = (Vec<String>, Vec<(usize, Vec<String>)>);

fn read_delimited(path: &Path, delimiter: u8) -> Result<Records> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        rows.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok((header, rows))
}

fn read_whitespace(path: &Path) -> Result<Records> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let mut header = None;
    let mut rows = Vec::new();
    for (i, line) in lines.by_ref() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<String> = line
            .split_whitespace()
            .map(|f| f.trim_matches('"').to_string())
            .collect();
        if header.is_none() {
            header = Some(fields);
        } else {
            rows.push((i + 1, fields));
        }
    }
    let header = header.ok_or_else(|| Error::Empty(format!("{} has no header", path.display())))?;
    Ok((header, rows))
}

fn from_records(
    header: Vec<String>,
    rows: Vec<(usize, Vec<String>)>,
    target: &str,
    options: &CsvOptions,
) -> Result<Dataset> {
    let width = header.len();
    let target_idx = header
        .iter()
        .position(|h| h == target)
        .ok_or_else(|| Error::MissingColumn(target.to_string()))?;
    for (line, row) in &rows {
        if row.len() != width {
            return Err(Error::Parse {
                line: *line,
                message: format!("expected {width} fields, found {}", row.len()),
            });
        }
    }
    let is_missing = |cell: &str| options.missing_tokens.iter().any(|t| t == cell);

    let mut y = Vec::with_capacity(rows.len());
    for (line, row) in &rows {
        let cell = row[target_idx].as_str();
        let v = parse_number(cell)
            .filter(|_| !is_missing(cell))
            .ok_or_else(|| Error::Parse {
                line: *line,
                message: format!("target `{target}` value `{cell}` is not numeric"),
            })?;
        y.push(v);
    }

    let mut features = Vec::with_capacity(width.saturating_sub(1));
    for (j, name) in header.iter().enumerate() {
        if j == target_idx {
            continue;
        }
        let cells = rows.iter().map(|(_, r)| r[j].as_str());
        let numeric = cells
            .clone()
            .filter(|c| !is_missing(c))
            .all(|c| parse_number(c).is_some());
        let column = if numeric {
            Column::Continuous(
                cells
                    .map(|c| {
                        if is_missing(c) {
                            f64::NAN
                        } else {
                            parse_number(c).unwrap_or(f64::NAN)
                        }
                    })
                    .collect(),
            )
        } else {
            Column::Categorical(
                cells
                    .map(|c| (!is_missing(c)).then(|| c.to_string()))
                    .collect(),
            )
        };
        features.push(Feature {
            name: name.clone(),
            column,
        });
    }
    let data = Dataset::new(features, y)?;
    data.validate_target(options.family)?;
    Ok(data)
}

fn parse_number(cell: &str) -> Option<f64> {
    let v = cell.parse::<f64>().ok()?;
    // "nan"/"inf" spellings are treated as text, not numbers
    v.is_finite().then_some(v)
}
