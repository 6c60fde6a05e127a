//! Mean-field theory of wide feedforward networks with alpha-stable weights:
//! stable-law machinery, the layerwise fluctuation map, Jacobian spectra,
//! phase diagrams, multifractality of Jacobian eigenvectors and manifold
//! propagation.
//!
//! The crate is `no_std` (with `alloc`) unless the `std` feature is enabled.

#![cfg_attr(not(any(feature = "std", test)), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod error;
pub mod exec;
pub mod geometry;
pub mod linalg;
pub mod math;
pub mod meanfield;
pub mod multifractal;
pub mod network;
pub mod optimize;
pub mod phase;
pub mod quad;
pub mod rng;
pub mod spectra;
pub mod stable;

pub use error::{Error, Result};
pub use exec::{Executor, Sequential};
pub use linalg::{Eigensolver, Matrix};
pub use network::{
    activity_moment, calibrated_input, fixed_point_input, Activation, JacobianForm, LayerState,
    Network, NetworkSpec,
};
pub use num_complex::Complex64;
