//! Quarterback fantasy-score prediction.
//!
//! This crate holds the algorithmic half of the pipeline and needs only
//! `alloc`: fantasy scoring, game-log corpora and a synthetic generator,
//! feature construction with rolling and exponentially weighted history,
//! an ε-insensitive support vector regressor solved in the dual, a
//! single-hidden-layer network trained by backpropagation, feature and
//! hyperparameter selection, and regression metrics.
//!
//! File formats, the command line and anything touching the OS live in the
//! `gridiron` companion crate.
#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod corpus;
pub mod domain;
pub mod error;
pub mod eval;
pub mod features;
pub mod math;
pub mod mlp;
pub mod normalize;
pub mod pipeline;
pub mod selection;
pub mod svr;
pub mod synth;

pub use error::{Error, Result};
