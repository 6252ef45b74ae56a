//! Fast random feature expansions for kernel methods.
//!
//! The central piece is [`fastfood::FastfoodTransform`], which replaces the
//! dense Gaussian matrix of random kitchen sinks by products of diagonal,
//! permutation and Walsh–Hadamard matrices. Dense and Nyström baselines,
//! exact kernel oracles and a small ridge-regression toolkit sit alongside.

pub mod baselines;
pub mod error;
pub mod fastfood;
pub mod feature_map;
pub mod hadamard;
pub mod kernels;
pub mod learn;
pub mod linalg;
pub mod sampling;
pub mod stats;

pub use error::{Error, Result};
pub use feature_map::{FeatureMap, FeatureVector};
