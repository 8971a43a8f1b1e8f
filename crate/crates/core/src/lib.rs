//! Per-vertex labeling of triangle-mesh surfaces with a two-stage geometric
//! network: B-spline graph convolutions over intrinsic and extrinsic edge
//! pseudo-coordinates, pairwise graph pooling in a U-shape, and a
//! refinement stage trained with a Dice-weighted loss.

pub mod data;
pub mod diff;
pub mod error;
pub mod gradcheck;
pub mod mesh;
pub mod network;
pub mod pool;
pub mod spline;
pub mod tensor;

pub use error::{Error, ErrorKind, Result};
pub use tensor::Tensor2;
