use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Characteristic polynomial by the Faddeev–LeVerrier recurrence.
///
/// Returns `c` of length `m + 1` with `det(λI - A) = Σ c[k] λ^k` and
/// `c[m] = 1`.
pub fn char_poly(a: &DenseMatrix) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(Error::dim("char_poly", "matrix must be square"));
    }
    let m = a.rows();
    let mut c = vec![0.0; m + 1];
    c[m] = 1.0;
    let id = DenseMatrix::identity(m);
    // M_0 = 0; M_k = A M_{k-1} + c_{m-k+1} I; c_{m-k} = -tr(A M_k) / k
    let mut mk = DenseMatrix::zeros(m, m);
    for k in 1..=m {
        mk = &(a * &mk) + &id.scale(c[m - k + 1]);
        let amk = a * &mk;
        c[m - k] = -amk.trace() / k as f64;
    }
    Ok(c)
}

/// Largest odd-degree coefficient magnitude relative to the largest
/// coefficient magnitude. Zero exactly when the polynomial is even in λ
/// (for even degree), i.e. when the spectrum is symmetric under λ -> -λ.
pub fn odd_coefficient_ratio(coeffs: &[f64]) -> f64 {
    let scale = coeffs.iter().fold(0.0, |m: f64, c| m.max(c.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let deg = coeffs.len() - 1;
    // in the monic polynomial of even degree, the odd powers must vanish
    coeffs
        .iter()
        .enumerate()
        .filter(|(k, _)| (deg - k) % 2 == 1)
        .fold(0.0, |m: f64, (_, c)| m.max(c.abs()))
        / scale
}
