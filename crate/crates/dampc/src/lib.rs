//! Domain adaptation by maximizing population correlation, with a
//! reinforcement-based cell search over a shared-weight supergraph.
//!
//! The crate is organized around small hand-derived building blocks:
//!
//! - [`numerics`]: dense f64 matrices and a splitmix64 generator, the only
//!   sources of arithmetic and randomness.
//! - [`similarity`]: the population correlation measure with its subgradient,
//!   plus the usual domain-discrepancy family (MMD, CORAL, CMD, KL,
//!   proxy A-distance) behind one plug-in interface.
//! - [`nn`]: linear / batch-norm / ReLU / dropout layers with manual
//!   forward-backward passes, cross-entropy, and Nesterov SGD.
//! - [`search_space`]: the cell-based architecture space, its encoding, and
//!   the shared-weight supergraph with child-network execution.
//! - [`controller`]: an LSTM policy that samples architectures and learns by
//!   REINFORCE with a moving-average baseline.
//! - [`training`]: the joint objective, the learning-rate schedule,
//!   fixed-architecture training, and the two-phase search loop.
//! - [`data`]: CSV feature ingestion, synthetic domain-shift generators, and
//!   deterministic paired batching.

pub mod controller;
pub mod data;
pub mod error;
pub mod nn;
pub mod numerics;
pub mod search_space;
pub mod similarity;
pub mod training;

pub use error::{Error, Result};
