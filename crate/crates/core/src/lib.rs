//! Graph-convolutional classifier learning for multi-label recognition.
//!
//! Label co-occurrence statistics become a re-weighted, normalized
//! correlation matrix; stacked graph convolutions map label embeddings
//! through that matrix into one linear classifier per label; the classifiers
//! are trained end to end against precomputed image features.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, synthetic data
//! and the command-line driver live in the `mlgcn` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod ablation;
pub mod embeddings;
mod error;
pub mod graph;
pub mod metrics;
pub mod model;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use tensor::Tensor;
