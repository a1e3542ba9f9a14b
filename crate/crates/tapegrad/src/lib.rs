//! Reverse-mode autodiff on a flat tape, generic over `f32`/`f64`.
//!
//! Built for small dense networks that must train deterministically on CPU:
//! ops record themselves on a [`Graph`], `backward` walks the tape in reverse
//! creation order, and every kernel accumulates into disjoint output regions
//! so rayon parallelism never changes results.

mod graph;
mod kernels;
mod ops;
mod scalar;

pub use graph::{Graph, TensorId};
pub use scalar::Scalar;

#[cfg(test)]
mod gradcheck_tests;
