use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EbmModel, Term, TermKind};
use crate::dataset::BinSpec;
use crate::error::{Error, Result};
use crate::exact;
use crate::family::Link;
use crate::scalar::Scalar;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    link: Link,
    intercept: String,
    bin_spec: BinSpec,
    terms: Vec<TermFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum TermFileKind {
    Main,
    Pair,
}

#[derive(Serialize, Deserialize)]
struct TermFile {
    kind: TermFileKind,
    features: Vec<String>,
    #[serde(with = "exact::vec")]
    scores: Vec<f64>,
}

impl<T: Scalar> EbmModel<T> {
    pub fn to_json(&self) -> String {
        let spec = self.bin_spec();
        let name = |f: usize| spec.features[f].name.clone();
        let file = ModelFile {
            version: MODEL_FORMAT_VERSION,
            link: self.link(),
            intercept: exact::encode(self.intercept().as_f64()),
            bin_spec: spec.clone(),
            terms: self
                .terms()
                .iter()
                .map(|t| {
                    let (kind, features) = match t.kind {
                        TermKind::Main(f) => (TermFileKind::Main, vec![name(f)]),
                        TermKind::Pair(f, g) => (TermFileKind::Pair, vec![name(f), name(g)]),
                    };
                    TermFile {
                        kind,
                        features,
                        scores: t.scores.iter().map(|s| s.as_f64()).collect(),
                    }
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        let version = raw
            .get("version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::Schema("missing `version` field".into()))?;
        if version != MODEL_FORMAT_VERSION as u64 {
            return Err(Error::VersionMismatch {
                found: u32::try_from(version).unwrap_or(u32::MAX),
                expected: MODEL_FORMAT_VERSION,
            });
        }
        let file: ModelFile =
            serde_json::from_value(raw).map_err(|e| Error::Schema(e.to_string()))?;
        file.bin_spec.validate()?;
        let spec = &file.bin_spec;
        let index = |name: &str| {
            spec.feature_index(name)
                .ok_or_else(|| Error::Schema(format!("term references unknown feature `{name}`")))
        };
        let terms = file
            .terms
            .iter()
            .map(|t| {
                let kind = match (&t.kind, t.features.as_slice()) {
                    (TermFileKind::Main, [f]) => TermKind::Main(index(f)?),
                    (TermFileKind::Pair, [f, g]) => TermKind::Pair(index(f)?, index(g)?),
                    _ => {
                        return Err(Error::Schema(
                            "term feature list has the wrong length".into(),
                        ))
                    }
                };
                Ok(Term {
                    kind,
                    scores: t.scores.iter().map(|&s| T::lit(s)).collect(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let intercept = exact::decode(&file.intercept).map_err(Error::Schema)?;
        EbmModel::new(T::lit(intercept), file.link, file.bin_spec, terms)
            .map_err(|e| Error::Schema(e.to_string()))
    }
}

pub fn save_model<T: Scalar>(model: &EbmModel<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model.to_json()).map_err(|e| Error::io(path, e))
}

pub fn load_model<T: Scalar>(path: impl AsRef<Path>) -> Result<EbmModel<T>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    EbmModel::from_json(&text)
}
