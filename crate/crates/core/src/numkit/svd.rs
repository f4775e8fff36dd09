//! One-sided (Hestenes) Jacobi SVD and the rank decisions built on it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Relative rank tolerance used unless configured otherwise.
pub const DEFAULT_REL_TOL: f64 = 1e-8;

const JACOBI_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 80;

/// Singular value decomposition with a complete set of right singular
/// vectors. For a wide matrix (`rows < cols`) the trailing `cols - rows`
/// singular values are structural zeros.
#[derive(Debug, Clone)]
pub struct Svd {
    /// Descending, length `cols`.
    pub sigma: Vec<f64>,
    /// `rows x cols`; column `j` is meaningful only where `sigma[j] > 0`.
    pub u: DenseMatrix,
    /// `cols x cols`, orthogonal.
    pub v: DenseMatrix,
    rows: usize,
}

pub fn svd(a: &DenseMatrix) -> Svd {
    let (m, n) = (a.rows(), a.cols());
    let len = m.max(n);
    // column-major working copy, zero-padded to at least n rows
    let mut w: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut c = vec![0.0; len];
            for i in 0..m {
                c[i] = a[(i, j)];
            }
            c
        })
        .collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut c = vec![0.0; n];
            c[j] = 1.0;
            c
        })
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = w[p]
                    .iter()
                    .zip(&w[q])
                    .fold((0.0, 0.0, 0.0), |(a, b, g), (x, y)| {
                        (a + x * x, b + y * y, g + x * y)
                    });
                if gamma == 0.0 || gamma.abs() <= JACOBI_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = w
        .iter()
        .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));

    let mut u_mat = DenseMatrix::zeros(m, n);
    let mut v_mat = DenseMatrix::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    for (k, &j) in order.iter().enumerate() {
        let s = norms[j];
        sigma.push(s);
        for i in 0..n {
            v_mat[(i, k)] = v[j][i];
        }
        if s > 0.0 {
            for i in 0..m {
                u_mat[(i, k)] = w[j][i] / s;
            }
        }
    }
    Svd {
        sigma,
        u: u_mat,
        v: v_mat,
        rows: m,
    }
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
        let (xp, yq) = (*x, *y);
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}

impl Svd {
    /// The `min(rows, cols)` singular values, descending.
    pub fn values(&self) -> &[f64] {
        &self.sigma[..self.rows.min(self.sigma.len())]
    }
}

/// Singular values in descending order, `min(rows, cols)` of them.
pub fn singular_values(a: &DenseMatrix) -> Vec<f64> {
    // the Jacobi sweep is cheaper over the shorter dimension
    if a.rows() < a.cols() {
        svd(&a.transpose()).sigma
    } else {
        svd(a).sigma
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankDiagnostics {
    pub singular_values: Vec<f64>,
    pub tolerance: f64,
    pub rank: usize,
    pub nullity: usize,
    /// `sigma[rank-1] / sigma[rank]`, absent when there is no such pair.
    pub gap_ratio: Option<f64>,
}

impl RankDiagnostics {
    fn from_spectrum(singular_values: Vec<f64>, rows: usize, cols: usize, rel_tol: f64) -> Self {
        let sigma_max = singular_values.first().copied().unwrap_or(0.0);
        let tolerance = rel_tol * rows.max(cols) as f64 * sigma_max;
        let rank = singular_values.iter().filter(|&&s| s > tolerance).count();
        let gap_ratio = (rank > 0 && rank < singular_values.len())
            .then(|| singular_values[rank - 1] / singular_values[rank].max(f64::MIN_POSITIVE));
        Self {
            singular_values,
            tolerance,
            rank,
            nullity: cols - rank,
            gap_ratio,
        }
    }
}

/// Numerical rank with tolerance `rel_tol * max(rows, cols) * sigma_max`.
pub fn numerical_rank(a: &DenseMatrix, rel_tol: f64) -> RankDiagnostics {
    RankDiagnostics::from_spectrum(singular_values(a), a.rows(), a.cols(), rel_tol)
}

#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub solution: DenseMatrix,
    pub residual_norm: f64,
    /// Orthonormal basis of the numerical nullspace, one vector per entry.
    pub nullspace_basis: Vec<Vec<f64>>,
    pub rank: RankDiagnostics,
}

/// Minimum-norm least-squares solution of `A x = b` via the pseudo-inverse
/// truncated at the numerical rank.
pub fn min_norm_solve(a: &DenseMatrix, b: &DenseMatrix, rel_tol: f64) -> Result<LeastSquares> {
    if b.cols() != 1 || b.rows() != a.rows() {
        return Err(Error::dim(
            "min_norm_solve",
            format!(
                "{}x{} system with {}x{} right-hand side",
                a.rows(),
                a.cols(),
                b.rows(),
                b.cols()
            ),
        ));
    }
    let (m, n) = (a.rows(), a.cols());
    let dec = svd(a);
    let rank = RankDiagnostics::from_spectrum(dec.values().to_vec(), m, n, rel_tol);

    let mut x = vec![0.0; n];
    for k in 0..rank.rank {
        let coef = (0..m).map(|i| dec.u[(i, k)] * b[(i, 0)]).sum::<f64>() / dec.sigma[k];
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += coef * dec.v[(i, k)];
        }
    }
    let solution = DenseMatrix::column(&x)?;
    let residual_norm = (&(a * &solution) - b).frobenius_norm();
    let nullspace_basis = (rank.rank..n).map(|k| dec.v.col_vec(k)).collect();
    Ok(LeastSquares {
        solution,
        residual_norm,
        nullspace_basis,
        rank,
    })
}
