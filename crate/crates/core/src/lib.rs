//! Tao general difference (TGD) operators and the pipelines built on them.
//!
//! The crate is organised bottom-up:
//!
//! - [`operators`]: discrete first- and second-order TGD stencils in one, two
//!   and three dimensions, plus the two fixed 15-tap presets.
//! - [`conv`]: dense true convolution with an explicit boundary policy.
//! - [`denoise`]: the TGD-continuity denoiser, driven by Adam.
//! - [`edge2d`]: first-order (gradient/NMS/hysteresis) and LoT
//!   (zero-crossing) edge detection, with Gaussian baselines.
//! - [`edge3d`]: static/kinetic edge detection on frame sequences.
//! - [`metrics`]: RMSE, PSNR, SSIM, SNR and seeded noise injection.
//! - [`synth`]: test signals and phantoms with exact ground truth.
//! - [`io`]: PGM/PNG images, CSV signals, operator text files, raw float grids.

pub mod conv;
pub mod denoise;
pub mod edge2d;
pub mod edge3d;
mod error;
pub mod io;
pub mod metrics;
pub mod operators;
pub mod synth;
pub mod threshold;

pub use error::{Error, Result};

/// A uniformly sampled 1D signal.
pub type Signal = ndarray::Array1<f64>;
/// A single-channel image, indexed `[row, col]`.
pub type Image = ndarray::Array2<f64>;
/// A frame stack, indexed `[t, row, col]`.
pub type Volume = ndarray::Array3<f64>;
/// A binary mask, indexed `[row, col]`.
pub type Mask = ndarray::Array2<bool>;
