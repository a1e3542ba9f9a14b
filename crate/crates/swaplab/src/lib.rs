//! swaplab: a desk-scale video body-swapping laboratory.
//!
//! A synthetic sprite world renders articulated figures with exact masks,
//! keypoints and pose maps, plus an oracle that produces the ground-truth
//! swapped video for any (reference identity, target clip) pair. On top of
//! it: a latent-diffusion inpainting model with reference-identity attention
//! injection, pose control and temporal layers; two-stage training with
//! brightness-decoupling augmentation; DDIM/CFG inference; a curation
//! pipeline; and a metric suite (OKS, background MSE, Frechet distances).

pub mod codec;
pub mod diffusion;
pub mod error;
pub mod rng;
pub mod world;

pub use error::{Result, SwapError};
