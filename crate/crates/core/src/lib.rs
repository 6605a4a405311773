//! Reconstruction of video captured through a non-regular quarter-density
//! sampling sensor by frequency-selective extrapolation, with optional
//! motion-compensated weighting.

pub mod cli;
pub mod error;
pub mod evaluation;
pub mod fse;
pub mod motion;
pub mod pipeline;
pub mod sampling;
pub mod synthetic;
pub mod video;
pub mod weighting;

pub use error::{Error, Result};
