//! File formats, synthetic data, checkpoints and the command-line driver
//! around [`mlgcn_core`].

pub mod artifacts;
pub mod checkpoint;
pub mod cli;
pub mod dataset;
mod error;
pub mod manifest;
pub mod matrix;
pub mod report;
pub mod synth;
pub mod text;

pub use error::{Error, Result};
