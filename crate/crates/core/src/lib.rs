//! Numerical audit of the auxiliary two-point boundary value problem that was
//! proposed for computing Lyapunov matrices of linear systems with a point
//! delay and a distributed delay.
//!
//! The crate lifts the matrix boundary value problem to vector form with
//! Kronecker products, checks the structural identities of the lifted
//! operator, measures the numerical ranks that decide whether the boundary
//! conditions determine a unique solution, and computes the true Lyapunov
//! matrix by brute force for comparison.

// `!(x <= tol)` is used on purpose: NaN must fail the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod error;
pub mod kron;
pub mod lifted;
pub mod matrix;
pub mod numkit;
pub mod oracle;

pub use error::{Error, Result};
pub use matrix::DenseMatrix;
