//! Convolutional denoising autoencoder with a fixed-point streaming accelerator model.
//!
//! The crate is `no_std` and only needs `alloc`. It contains:
//!
//! - [`tensor`]: the channel-major rank-3 [`Tensor`] that every layer consumes and produces.
//! - [`fixed`]: signed/unsigned Q-format arithmetic used by the quantized inference path.
//! - [`ops`]: convolution, ReLU, max-pooling, nearest up-sampling, padding and cropping,
//!   together with their hand-derived adjoints.
//! - [`dataset`] and [`metrics`]: Gaussian corruption, seeded splitting, MSE/PSNR/pixel accuracy.
//! - [`model`]: the 13-layer encoder/decoder stack, its training loop and a fixed-point
//!   reference forward pass.
//! - [`accel`]: a cycle-approximate model of the streaming accelerator (channel distributor,
//!   lane FIFOs, round-robin arbiter, output controller) and the throughput/efficiency report.
//!
//! File formats, configuration and the command-line driver live in the `cae` crate.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod accel;
pub mod dataset;
mod error;
pub mod fixed;
pub mod metrics;
pub mod model;
pub mod ops;
pub mod rng;
pub mod tensor;

pub use error::{Error, Result};
pub use fixed::FixedPointFormat;
pub use tensor::{Shape, Tensor};
