//! Tensor-train (TT) containers and the algebra needed to build and refine
//! quantized grid functions.
//!
//! A tensor train represents an order-`d` array through a chain of 3-way
//! cores:
//!
//! ```text
//! A[i1, i2, ..., id] = G1[i1] G2[i2] ... Gd[id]
//! ```
//!
//! where `Gk[ik]` is an `r_{k-1} x r_k` matrix slice of the core
//! `Gk : (r_{k-1}, n_k, r_k)`. Closed trains have `r_0 = r_d = 1`; open
//! boundary ranks are allowed so the same container can carry Tucker factor
//! chains with a dangling mode leg.
//!
//! The crate provides:
//! - [`TensorTrain`]: construction from dense data (TT-SVD), evaluation,
//!   densification, addition, Hadamard products, norms, and deterministic
//!   SVD-based rounding controlled by a [`Tolerance`];
//! - [`TtOperator`]: matrix-product operators with apply/compose/transpose;
//! - [`io`]: a small binary container format for trains and operators;
//! - [`parallel`]: rayon-backed data-parallel helpers with a sequential
//!   fallback when the `parallel` feature is disabled.

pub mod error;
pub mod io;
pub mod linalg;
pub mod operator;
pub mod parallel;
pub mod tt;

pub use error::{Error, ErrorCategory, Result};
pub use operator::TtOperator;
pub use tt::{TensorTrain, Tolerance};
