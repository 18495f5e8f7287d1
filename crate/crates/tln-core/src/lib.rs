//! Core algorithms for training sequence classifiers under temporal label
//! noise.
//!
//! The crate is organized around the pipeline it supports:
//!
//! - [`tensor`] / [`tape`] / [`adam`]: a minimal dense-tensor engine with
//!   reverse-mode gradient accumulation and an Adam optimizer, sized for GRU
//!   training and small noise-model networks.
//! - [`noise`]: parametric time-varying label-noise functions `Q(t)`, label
//!   corruption, validation, and approximation-error metrics.
//! - [`data`]: synthetic HMM sequence generation and train/test splitting.
//! - [`model`]: the GRU sequence classifier and the two trainable
//!   noise-function parameterizations (continuous network, per-step weights).
//! - [`loss`]: sequence NLL, the forward-corrected sequence loss, and the
//!   augmented Lagrangian objective used for joint estimation.
//! - [`train`]: the training procedures (noise-ignoring baseline, oracle
//!   forward training, static anchor/volume-minimization baselines, plug-in,
//!   discontinuous, and continuous estimators).
//! - [`metrics`]: clean-label evaluation and empirical noise estimation from
//!   paired label tracks.
//!
//! The crate is `no_std`-compatible (requires `alloc`); the default `std`
//! feature enables faster platform math and `std::error::Error` impls.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod adam;
pub mod data;
pub mod error;
pub mod fdcheck;
pub mod loss;
mod math;
pub mod metrics;
pub mod model;
pub mod noise;
pub mod params;
pub mod rng;
pub mod tape;
pub mod tensor;
pub mod train;

pub use error::Error;
pub use tensor::Tensor;
