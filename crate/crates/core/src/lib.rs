//! Blind quality assessment for 360-degree (equirectangular) images.
//!
//! Features are the Shannon entropies of Haar wavelet subbands plus
//! natural-scene-statistics parameters measured both on the whole ERP map and
//! averaged over viewports sampled on latitude rings. An ε-SVR maps features
//! to a quality score, and [`eval`] provides the SROCC/PLCC/RMSE protocol with
//! logistic remapping and repeated random splits.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the `*64` aliases
//! below are the concrete types the CLI uses.

// Negated comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod nss;
pub mod pipeline;
pub mod raster;
pub mod regression;
pub mod scalar;
pub mod synth;
pub mod viewport;
pub mod wavelet;

pub use error::{Error, Result};
pub use nss::{NaturalnessFeatures, NssConfig};
pub use pipeline::FeatureConfig;
pub use raster::Raster;
pub use regression::{RegressionModel, SvrParams};
pub use scalar::Real;
pub use viewport::ViewportSamplingConfig;
pub use wavelet::HaarTransformSpec;

pub type Raster64 = Raster<f64>;
pub type Raster32 = Raster<f32>;
pub type NaturalnessFeatures64 = NaturalnessFeatures<f64>;
pub type NaturalnessFeatures32 = NaturalnessFeatures<f32>;
pub type RegressionModel64 = RegressionModel<f64>;
pub type RegressionModel32 = RegressionModel<f32>;
pub type SubbandSet64 = wavelet::SubbandSet<f64>;
pub type EvalReport64 = eval::EvalReport<f64>;
pub type TrialSummary64 = eval::TrialSummary<f64>;
