//! Zero-shot cross-modality image translation with a score-based diffusion
//! model guided by local mutual information.
//!
//! A variance-exploding diffusion model is trained on target-domain images
//! only. At inference, a source-domain guide image steers the reverse SDE
//! through a per-pixel local mutual information map computed between the
//! guide and the current sample, so no source-domain data is ever needed for
//! training.
//!
//! The crate is organized around the pipeline stages:
//!
//! - [`lmi`]: local-wise mutual information maps with a brute-force oracle;
//! - [`sde`]: noise schedule, forward perturbation, reverse Euler-Maruyama;
//! - [`model`]: the time-conditioned convolutional score network with exact
//!   hand-written gradients and checkpoint serialization;
//! - [`train`]: denoising score matching on target-domain images;
//! - [`translate`]: the guided translation pipeline plus a perturbation
//!   (noise-and-denoise) baseline;
//! - [`synth`]: paired synthetic modality datasets and grayscale image I/O;
//! - [`metrics`]: SSIM, PSNR, MSE and global mutual information reports;
//! - [`cli`]: the `midiffusion` command-line front end.
//!
//! See the crate examples for one runnable program per capability.

pub mod cli;
pub mod config;
pub mod error;
pub mod image;
pub mod lmi;
pub mod metrics;
pub mod model;
pub mod sde;
pub mod synth;
pub mod train;
pub mod translate;

pub use error::{Error, Result};
pub use image::Image;
