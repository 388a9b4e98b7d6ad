//! Importance-aware semantic transmission over Rayleigh MIMO channels.
//!
//! The crate pairs closed-form predictors of semantic information
//! distortion (SID) and semantic outage probability (SOP) with a Monte
//! Carlo link simulator that exercises the same chain symbol by symbol:
//! importance-ranked selection, layer mapping onto SVD subchannels,
//! power-domain superposition and semantic interference cancellation.

// `!(x >= 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod channel;
pub mod cli;
pub mod config;
pub mod error;
pub mod layer_mapping;
pub mod montecarlo;
pub mod multiuser;
pub mod numerics;
pub mod semantic_source;

pub use error::{Error, Result};
