//! Lossless text encoding of floats for model files.
//!
//! Values are written with Rust's shortest round-trip formatting and parsed
//! back with `str::parse`, which is correctly rounded, so every finite value
//! (and the infinities and NaN) survives a save/load cycle bit for bit.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serializer};

pub fn encode(v: f64) -> String {
    format!("{v:?}")
}

pub fn decode(s: &str) -> Result<f64, String> {
    s.parse::<f64>()
        .map_err(|e| format!("`{s}` is not a float: {e}"))
}

pub mod vec {
    use super::*;

    pub fn serialize<S: Serializer>(values: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(values.iter().map(|&v| encode(v)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.iter()
            .map(|s| decode(s).map_err(D::Error::custom))
            .collect()
    }
}
