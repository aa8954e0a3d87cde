//! Instruction-prompted aspect-based sentiment analysis: corpus loading,
//! prompt rendering, model backends, output decoding, scoring and experiment
//! orchestration.

pub mod backend;
pub mod canon;
pub mod cli;
pub mod corpus;
pub mod decoding;
mod error;
pub mod experiments;
pub mod metrics;
pub mod prompting;

pub use error::{Error, Result};
