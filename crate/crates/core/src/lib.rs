//! Tabular synthetic data generation with a distributional VAE.
//!
//! The decoder models every continuous column by a conditional quantile
//! function (a monotone linear spline in the quantile level) trained with the
//! closed-form CRPS, and every discrete column by a categorical head. New rows
//! are drawn by inverse-transform sampling from the prior. The [`metrics`]
//! module holds the utility / similarity / privacy battery used to judge the
//! synthetic tables.
//!
//! Module map:
//! - [`data`]: schemas, CSV ingestion, standardization, one-hot encoding, splits
//! - [`nn`]: dense layers, analytic backprop, Adam
//! - [`spline`]: the isotonic spline quantile function and its CRPS loss
//! - [`model`]: encoder / decoder, the training objective and loop
//! - [`synthesis`]: sampling, estimated CDFs, ordinal discretization
//! - [`metrics`]: evaluation metrics and privacy attacks
//! - [`checkpoint`]: the serialized model plus on-disk formats
//! - [`toy`]: small synthetic ground-truth distributions for demos and tests

pub mod checkpoint;
pub mod data;
mod error;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod spline;
pub mod synthesis;
pub mod toy;

pub use checkpoint::Checkpoint;
pub use data::{ColumnKind, ColumnSpec, ScalingStats, Schema, Table};
pub use error::{Error, Result};
pub use model::{train, LossBreakdown, TrainConfig};
pub use spline::SplineCoeffs;
