//! Dense numerical kernels: matrix exponential, singular values and rank,
//! characteristic polynomials and minimum-norm least squares.

mod charpoly;
mod expm;
mod lu;
mod svd;

pub use charpoly::{char_poly, odd_coefficient_ratio};
pub use expm::{mat_exp, DEFAULT_EXPM_ACCURACY};
pub use lu::Lu;
pub use svd::{
    min_norm_solve, numerical_rank, singular_values, svd, LeastSquares, RankDiagnostics, Svd,
    DEFAULT_REL_TOL,
};
