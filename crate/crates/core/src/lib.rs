//! Sparse filtering of comovement networks.
//!
//! A sample covariance (or correlation) matrix is thresholded at the level
//! whose spectrum is closest to a shrinkage target, optionally trading
//! distance against a cost on deleted edges. See [`filter::run_filter`] for
//! the end-to-end pipeline.

// `!(x > 0.0)` is used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod covariance;
pub mod data;
pub mod error;
pub mod filter;
pub mod matrix;
pub mod metrics;
pub mod network;
pub mod report;
pub mod shrinkage;
pub mod sim;
pub mod spectral;

pub use data::DataMatrix;
pub use error::{Error, Result};
pub use filter::{run_filter, CostSpec, FilterOptions, FilterResult, Scale, TargetChoice};
pub use matrix::{MatrixKind, SymMatrix};
pub use spectral::{Band, DistanceSpec, Metric, Spectrum};
