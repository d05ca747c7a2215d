use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Response distribution. Fixes both the boosting gradient and the LASSO loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Squared-error loss, identity link.
    #[default]
    Gaussian,
    /// Bernoulli deviance, logit link.
    Binomial,
}

/// Link between the additive predictor and the mean response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    Identity,
    Logit,
}

impl Family {
    pub fn link(self) -> Link {
        match self {
            Family::Gaussian => Link::Identity,
            Family::Binomial => Link::Logit,
        }
    }
}

impl Link {
    pub fn family(self) -> Family {
        match self {
            Link::Identity => Family::Gaussian,
            Link::Logit => Family::Binomial,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Gaussian => "gaussian",
            Family::Binomial => "binomial",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "regression" => Ok(Family::Gaussian),
            "binomial" | "classification" => Ok(Family::Binomial),
            other => Err(Error::InvalidArgument(format!("unknown family `{other}`"))),
        }
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Link::Identity => "identity",
            Link::Logit => "logit",
        })
    }
}
