//! Interpolation of dyadic-grid functions in tensor-train form.
//!
//! A function sampled on 2^n points compresses into n binary cores; this
//! crate refines such a train onto 2^{n+m} points by applying a convolution
//! interpolation kernel as a train operator. The operator's coarse part is a
//! short sum of bit-shift operators, its fine part the closed-form train of
//! the stencil polynomials, so the added tail carries provably small ranks.
//! Multi-dimensional layouts (plain, interleaved, Tucker) are refined per
//! dimension.

pub mod boundary;
pub mod grid;
pub mod kernels;
pub mod poly;
pub mod shift;
pub mod tti;
pub mod tucker;

pub use boundary::{boundary_correction, clamped_boundary_correction, BoundaryMode};
pub use grid::{encode_function, Encoded, GridDescriptor, Layout};
pub use kernels::{kernel_by_name, stencils, Kernel, StencilSet};
pub use poly::{polynomial_qtt, PolyBasis, Polynomial};
pub use qtti_core::{Error, Result, TensorTrain, Tolerance};
pub use shift::{derivative_mpo, shift_mpo, ShiftKind};
pub use tti::{
    apply_tti, apply_tti_tucker, build_tti_1d, build_tti_multidim_interleaved, refine_1d,
    refine_interleaved, TtiOperator,
};
pub use tucker::{to_tucker, TuckerTT};
