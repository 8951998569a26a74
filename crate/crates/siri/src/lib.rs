//! Variable selection for general index models via sliced inverse
//! regression.
//!
//! The crate implements marginal screening, stepwise
//! forward-addition/backward-deletion selection driven by two
//! likelihood-ratio statistics on an inverse (predictors-given-response)
//! model, cross-validated hyperparameter choice, scenario generators and a
//! Monte-Carlo benchmark harness.

pub mod bench;
pub mod cv;
pub mod dataset;
pub mod error;
pub mod numkit;
pub mod select;
pub mod sim;
pub mod slicing;
pub mod stats;

pub use dataset::Dataset;
pub use error::{Error, Result};
pub use select::{HyperParams, SelectionState};
pub use slicing::SlicingScheme;
