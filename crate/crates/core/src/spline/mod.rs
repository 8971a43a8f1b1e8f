//! Continuous B-spline convolution over graph edges.
//!
//! Each layer owns one scalar kernel `x(u) = Σ_p w_p · B_p(u)` evaluated on
//! the edge pseudo-coordinates `u`, and aggregates neighbor features as
//! `δ( mean_j x(u_ij) · f_j · W + f_i · W_root )`.

mod basis;
mod layer;
mod support;

pub use basis::BSplineBasis;
pub use layer::{SplineCache, SplineConvLayer};
pub use support::SplineSupport;
