//! Core model and algorithms for compressing and rendering 4D Gaussian scenes.
//!
//! A dynamic scene is a collection of anisotropic Gaussians over (x, y, z, t).
//! At render time each Gaussian is conditioned on the timestamp, projected to
//! a screen-space splat and alpha-blended front to back. On top of that sit
//! the compression stages: a spatial-temporal variation score that ranks
//! Gaussians for pruning, key-frame visibility masks that skip inactive
//! Gaussians per frame, and vector quantization of the SH color blocks.
//!
//! The crate is `no_std`-compatible (with `alloc`); the `std` feature (on by
//! default) enables multi-threaded rendering and the faster platform math.
//! All maths run in f64; file serialization (in the companion tools crate)
//! is f32.

#![cfg_attr(not(feature = "std"), no_std)]
// Negated float comparisons below are deliberate: they must reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analysis;
pub mod bitmask;
pub mod camera;
pub mod error;
pub mod filter;
pub mod gaussian;
mod mathx;
pub mod metrics;
pub mod raster;
pub mod rotor;
pub mod scoring;
pub mod sh;
pub mod synth;
#[cfg(test)]
pub(crate) mod testutil;
pub mod vq;

pub use nalgebra;

pub use bitmask::Bitmask;
pub use camera::Camera;
pub use error::CoreError;
pub use filter::KeyframeMaskSet;
pub use gaussian::{ConditionalGaussian3D, Gaussian4D, Scene4D};
pub use raster::{ContributionRecord, RenderFrame, RenderOutput, RenderStats};
pub use rotor::Quat;
pub use scoring::ScoreTable;
pub use synth::SceneSpec;
pub use vq::Codebook;

/// Result alias used throughout the crate.
pub type Result<T> = core::result::Result<T, CoreError>;
