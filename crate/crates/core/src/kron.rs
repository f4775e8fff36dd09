//! Column stacking, Kronecker products and the square commutation matrix.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Stacks the columns of `m` into one column vector.
pub fn vec(m: &DenseMatrix) -> DenseMatrix {
    let (r, c) = (m.rows(), m.cols());
    let mut v = DenseMatrix::zeros(r * c, 1);
    for j in 0..c {
        for i in 0..r {
            v[(j * r + i, 0)] = m[(i, j)];
        }
    }
    v
}

/// Inverse of [`vec`]: refills a `rows x cols` matrix column by column.
pub fn unvec(v: &DenseMatrix, rows: usize, cols: usize) -> Result<DenseMatrix> {
    if v.cols() != 1 || v.rows() != rows * cols || rows == 0 || cols == 0 {
        return Err(Error::dim(
            "unvec",
            format!(
                "{}x{} input cannot fill a {rows}x{cols} matrix",
                v.rows(),
                v.cols()
            ),
        ));
    }
    let mut m = DenseMatrix::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = v[(j * rows + i, 0)];
        }
    }
    Ok(m)
}

/// Kronecker product: block `(i, j)` of the result is `a[(i, j)] * b`.
pub fn kron(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let (ar, ac, br, bc) = (a.rows(), a.cols(), b.rows(), b.cols());
    let mut out = DenseMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            if s == 0.0 {
                continue;
            }
            for p in 0..br {
                for q in 0..bc {
                    out[(i * br + p, j * bc + q)] = s * b[(p, q)];
                }
            }
        }
    }
    out
}

/// The `n^2 x n^2` permutation `T` with `T vec(A) = vec(A^T)` for every
/// `n x n` matrix `A`. Symmetric and involutive.
pub fn commutation_matrix(n: usize) -> DenseMatrix {
    assert!(n >= 1, "commutation matrix needs n >= 1");
    let mut t = DenseMatrix::zeros(n * n, n * n);
    // vec(A)[j*n + i] = A[i][j], vec(A^T)[i*n + j] = A[i][j]
    for i in 0..n {
        for j in 0..n {
            t[(i * n + j, j * n + i)] = 1.0;
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn vec_examples() {
        assert_eq!(
            vec(&m(&[&[1., 2.], &[3., 4.]])).as_slice(),
            &[1., 3., 2., 4.]
        );
        assert_eq!(vec(&m(&[&[5.]])).as_slice(), &[5.]);
        assert_eq!(vec(&DenseMatrix::zeros(2, 2)), DenseMatrix::zeros(4, 1));
    }

    #[test]
    fn unvec_examples() {
        let v = DenseMatrix::column(&[1., 3., 2., 4.]).unwrap();
        assert_eq!(unvec(&v, 2, 2).unwrap(), m(&[&[1., 2.], &[3., 4.]]));
        let v = DenseMatrix::column(&[7.]).unwrap();
        assert_eq!(unvec(&v, 1, 1).unwrap(), m(&[&[7.]]));
        let v = DenseMatrix::column(&[1., 2., 3., 4., 5., 6.]).unwrap();
        assert_eq!(unvec(&v, 2, 3).unwrap(), m(&[&[1., 3., 5.], &[2., 4., 6.]]));
    }

    #[test]
    fn unvec_rejects_mismatch() {
        let v = DenseMatrix::column(&[1., 2., 3.]).unwrap();
        assert!(matches!(unvec(&v, 2, 2), Err(Error::Dimension { .. })));
        assert!(unvec(&DenseMatrix::zeros(2, 2), 4, 1).is_err());
    }

    #[test]
    fn kron_examples() {
        let b = m(&[&[1., 2.], &[3., 4.]]);
        assert_eq!(kron(&DenseMatrix::identity(1), &b), b);

        let k = kron(&DenseMatrix::identity(2), &b);
        assert_eq!(k.block(0, 0, 2, 2), b);
        assert_eq!(k.block(2, 2, 2, 2), b);
        assert_eq!(k.block(0, 2, 2, 2), DenseMatrix::zeros(2, 2));
        assert_eq!(k.block(2, 0, 2, 2), DenseMatrix::zeros(2, 2));

        let k = kron(&m(&[&[0., 1.], &[0., 0.]]), &DenseMatrix::identity(2));
        let mut expected = DenseMatrix::zeros(4, 4);
        expected.set_block(0, 2, &DenseMatrix::identity(2));
        assert_eq!(k, expected);
    }

    #[test]
    fn commutation_small() {
        assert_eq!(commutation_matrix(1), DenseMatrix::identity(1));
        let t = commutation_matrix(2);
        let mut expected = DenseMatrix::zeros(4, 4);
        for (i, j) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
            expected[(i, j)] = 1.0;
        }
        assert_eq!(t, expected);
    }

    #[test]
    fn commutation_transposes_3x3() {
        let a = m(&[&[0.3, -1.2, 2.0], &[4.5, 0.0, -0.7], &[1.1, 9.0, 3.3]]);
        let t = commutation_matrix(3);
        assert_eq!(&t * &vec(&a), vec(&a.transpose()));
        assert_eq!(t, t.transpose());
        assert_eq!(&t * &t, DenseMatrix::identity(9));
    }
}
