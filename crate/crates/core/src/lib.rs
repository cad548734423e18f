//! Threshold estimation for oscillating Brownian motion.

// Quadrature nodes and reference values keep all printed digits; `!(a < b)`
// is used on purpose so NaN fails validation.
#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod inference;
pub mod likelihood;
pub mod limit_law;
pub mod mle;
pub mod model;
pub mod quadrature;
pub mod rng;
pub mod sampler;
pub mod scalar;
pub mod stats;

pub use error::{ObmError, Result};
pub use model::{GaussianEnvelope, ModelParams, Regime};
pub use rng::RngStream;
pub use sampler::PathSample;
pub use scalar::Scalar;
pub use experiments::ExperimentConfig;
pub use inference::{EstimationReport, LocalTimeScale};
pub use likelihood::{DriftConstants, LikelihoodEvaluator};
pub use limit_law::{LimitLawParams, LimitQuantiles};
pub use mle::{ArgsupConfig, ArgsupResult, Window};

/// Double-precision aliases for the generic closed-form types.
pub type PathF64 = PathSample<f64>;
pub type PathF32 = PathSample<f32>;
pub type DriftConstantsF64 = DriftConstants<f64>;
pub type LimitParamsF64 = LimitLawParams<f64>;
pub type EstimationReportF64 = EstimationReport<f64>;
