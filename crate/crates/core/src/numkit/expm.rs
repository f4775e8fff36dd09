use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

use super::lu::Lu;

/// Unit roundoff target; gives the classical degree-13 scaling threshold.
pub const DEFAULT_EXPM_ACCURACY: f64 = f64::EPSILON / 2.0;

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

// Largest 1-norm for which the [13/13] approximant has backward error
// below unit roundoff (Higham 2005).
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring with a [13/13] Padé approximant.
///
/// The scaling exponent is the smallest `s` with `||A||_1 / 2^s` below a
/// threshold derived from `accuracy_target`. The Padé remainder grows like
/// `||X||^27`, so looser targets admit a proportionally larger threshold.
/// Targets tighter than unit roundoff are clamped to it.
pub fn mat_exp(a: &DenseMatrix, accuracy_target: f64) -> Result<DenseMatrix> {
    if !a.is_square() {
        return Err(Error::dim(
            "mat_exp",
            format!("{}x{} is not square", a.rows(), a.cols()),
        ));
    }
    if !(accuracy_target > 0.0) {
        return Err(Error::Config("accuracy target must be positive".into()));
    }
    let n = a.rows();
    let ratio = (accuracy_target / DEFAULT_EXPM_ACCURACY).max(1.0);
    let theta = THETA13 * ratio.powf(1.0 / 27.0);

    let norm = a.norm_1();
    let s = if norm > theta {
        (norm / theta).log2().ceil() as i32
    } else {
        0
    };
    let x = a.scale(0.5f64.powi(s));

    let id = DenseMatrix::identity(n);
    let x2 = &x * &x;
    let x4 = &x2 * &x2;
    let x6 = &x4 * &x2;
    let b = &PADE13;
    let lin = |c6: f64, c4: f64, c2: f64| -> DenseMatrix {
        &(&x6.scale(c6) + &x4.scale(c4)) + &x2.scale(c2)
    };

    let u_inner = &(&x6 * &lin(b[13], b[11], b[9])) + &(&lin(b[7], b[5], b[3]) + &id.scale(b[1]));
    let u = &x * &u_inner;
    let v = &(&x6 * &lin(b[12], b[10], b[8])) + &(&lin(b[6], b[4], b[2]) + &id.scale(b[0]));

    let p = &v + &u;
    let q = &v - &u;
    let mut r = Lu::factor(&q)?.solve(&p)?;
    for _ in 0..s {
        r = &r * &r;
    }
    if r.as_slice().iter().any(|x| !x.is_finite()) {
        return Err(Error::Instability("matrix exponential overflowed".into()));
    }
    Ok(r)
}
