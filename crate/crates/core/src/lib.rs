//! Compression for ReLU feedforward classifiers.
//!
//! A ReLU neuron whose pre-activation stays non-negative on the data it sees
//! behaves as the identity; such neurons add no nonlinearity and can be
//! removed without changing the function. This crate finds them — either
//! provably from weight signs or empirically from activation rates on a
//! pruning set — and folds their weights into shortcut connections that
//! bridge to the next layer, shrinking the network while tracking the size
//! and accuracy trade-off.
//!
//! Everything is generic over the scalar ([`Scalar`], implemented for `f32`
//! and `f64`); the type aliases at the crate root fix `f64`, which is what
//! the file formats store.

pub mod compression;
pub mod dataio;
pub mod error;
pub mod harness;
pub mod matrix;
pub mod network;
pub mod presets;
pub mod profiling;
pub mod scalar;
pub mod training;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Default-precision aliases; the serialized formats are `f64` exactly.
pub type Matrix64 = matrix::Matrix<f64>;
pub type Network64 = network::Network<f64>;
pub type Dataset64 = dataio::Dataset<f64>;
