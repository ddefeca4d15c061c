//! Simulation and reconstruction for coded aperture keyed exposure (CAKE)
//! compressive video.
//!
//! A CAKE camera convolves each high-rate frame with a coded mask,
//! downsamples it onto a low-resolution detector and integrates `B`
//! consecutive coded frames into a single readout. This crate provides the
//! sensing operators, the mask families, closed-form coarse recovery from
//! dual-scale masks, optical-flow estimation, the sparse reconstruction
//! programs and empirical restricted-isometry diagnostics.

pub mod error;
pub mod fft;
pub mod flow;
pub mod geometry;
pub mod io;
pub mod masks;
pub mod operators;
mod par;
pub mod pgm;
pub mod pipeline;
pub mod ripcheck;
pub mod scene;
pub mod solvers;
pub mod video;

pub use error::{CakeError, Result};
pub use geometry::SamplingGeometry;
pub use video::{CubeKind, NoiseModel, RectRegion, VideoCube};
