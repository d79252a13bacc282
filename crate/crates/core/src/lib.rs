//! Simulation core for a quantum privacy-preserving camera.
//!
//! Images are encoded as FRQI states on a dense statevector simulator,
//! manipulated by controlled-RX privacy gates and noise actions before
//! measurement, and scored by two competing classifiers (public: letter vs
//! number, private: which character). A double deep Q-learning agent picks
//! the action set applied to each frame.
//!
//! Module map:
//! - [`qsim`]: statevector, gates, circuits, sampling, depth.
//! - [`frqi`]: encoding, encoder circuit, shot-based decoding, redaction.
//! - [`actions`]: base-action catalog, action-set codec, plan compilation.
//! - [`data`]: IDX ingestion, label maps, resampling, augmentations, synthetic glyphs.
//! - [`nn`]: tensors, layers, backprop, Adam, gradient checks, parameter files.
//! - [`classifiers`]: public/private CNNs, features, evaluation, finetuning.
//! - [`agent`]: replay buffer, double-Q targets, training steps, checkpoints.
//! - [`env`]: the camera environment and reward policies.
//! - [`harness`]: training runs, frozen-policy generation, attacks, baselines, depth bench.

pub mod actions;
pub mod agent;
pub mod classifiers;
pub mod data;
pub mod env;
mod error;
pub mod frqi;
pub mod harness;
pub mod image;
pub mod nn;
pub mod qsim;
pub mod rng;

pub use error::{Error, Result};
