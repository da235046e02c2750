//! Spontaneous emission of a two-level atom inside a finite coupled-cavity
//! array: exact single-excitation dynamics, closed-form predictions for the
//! exponential and dressed-atom stages, and trajectory analysis.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod arrowhead;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod scenario;
pub mod theory;

pub use config::RunConfig;
pub use error::{CcaError, Result};
pub use model::{build_model, CcaModel, CcaParams, Resonance};
pub use scenario::{analyze_run, run_scenario, RunReport};
