//! Sparse reweighting of generalized additive models.
//!
//! A boosted additive model ([`ebm`]) is fit on binned features, each
//! term's contribution is treated as a regression input, and a LASSO path
//! ([`lasso`]) picks a small, reweighted subset of terms ([`postprocess`]).
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix `f64`.

pub mod dataset;
pub mod ebm;
mod error;
mod exact;
pub mod family;
pub mod lasso;
pub mod metrics;
pub mod postprocess;
pub mod scalar;

pub use dataset::{BinSpec, Dataset, Feature};
pub use error::{Error, Result};
pub use family::{Family, Link};
pub use scalar::Scalar;

pub type Model = ebm::EbmModel<f64>;
pub type ModelF32 = ebm::EbmModel<f32>;
pub type Contributions = ebm::ContribMatrix<f64>;
pub type LassoConfig = lasso::LassoConfig<f64>;
pub type LassoPath = lasso::LassoPath<f64>;
pub type LassoFit = lasso::LassoFit<f64>;
pub type PipelineResult = postprocess::PipelineResult<f64>;
