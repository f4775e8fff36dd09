//! Kronecker-lifted auxiliary boundary value problem and its rank audit.
//!
//! The lifted state is `y = (z, v, x0, x1)` with `z = vec(Z)` and so on;
//! every operator here uses that block order. The auxiliary problem is
//! `y' = H y` on `[0, 1]` with boundary rows `M y(0) + N y(1) = rhs`, which
//! close to `(M + N e^H) y(0) = rhs`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kron::{commutation_matrix, kron, vec};
use crate::matrix::DenseMatrix;
use crate::numkit::{
    char_poly, mat_exp, min_norm_solve, numerical_rank, odd_coefficient_ratio, RankDiagnostics,
    DEFAULT_EXPM_ACCURACY,
};

/// Linear delay system with kernel `G(θ) = sin(ωθ) B0 + cos(ωθ) B1`
/// on `[-h, 0]`, plus the weight `W` of the quadratic cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub n: usize,
    pub h: f64,
    pub omega: f64,
    pub a0: DenseMatrix,
    pub a1: DenseMatrix,
    pub b0: DenseMatrix,
    pub b1: DenseMatrix,
    pub w: DenseMatrix,
}

impl SystemSpec {
    /// Builds and validates a system with `h = 1`, `ω = π`.
    pub fn new(
        a0: DenseMatrix,
        a1: DenseMatrix,
        b0: DenseMatrix,
        b1: DenseMatrix,
        w: DenseMatrix,
    ) -> Result<Self> {
        let spec = Self {
            n: a0.rows(),
            h: 1.0,
            omega: PI,
            a0,
            a1,
            b0,
            b1,
            w,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if n == 0 {
            return Err(Error::InvalidSystem(
                "state dimension must be positive".into(),
            ));
        }
        for (name, m) in self.named_matrices() {
            if m.rows() != n || m.cols() != n {
                return Err(Error::InvalidSystem(format!(
                    "{name} is {}x{}, expected {n}x{n}",
                    m.rows(),
                    m.cols()
                )));
            }
            if m.as_slice().iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidSystem(format!(
                    "{name} has non-finite entries"
                )));
            }
        }
        if !self.w.is_symmetric() {
            return Err(Error::InvalidSystem("W must be exactly symmetric".into()));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::InvalidSystem(format!(
                "delay h = {} must be positive",
                self.h
            )));
        }
        if !self.omega.is_finite() {
            return Err(Error::InvalidSystem(
                "kernel frequency must be finite".into(),
            ));
        }
        Ok(())
    }

    fn named_matrices(&self) -> [(&'static str, &DenseMatrix); 5] {
        [
            ("A0", &self.a0),
            ("A1", &self.a1),
            ("B0", &self.b0),
            ("B1", &self.b1),
            ("W", &self.w),
        ]
    }

    /// Distributed-delay kernel at `theta`.
    pub fn kernel(&self, theta: f64) -> DenseMatrix {
        let (s, c) = (self.omega * theta).sin_cos();
        &self.b0.scale(s) + &self.b1.scale(c)
    }

    /// The lifted system is derived for the unit delay and ω = π only.
    fn require_derived_case(&self) -> Result<()> {
        if (self.omega - PI).abs() > 1e-12 || (self.h - 1.0).abs() > 1e-12 {
            return Err(Error::Unsupported(format!(
                "the lifted BVP is only derived for h = 1 and omega = pi (got h = {}, omega = {})",
                self.h, self.omega
            )));
        }
        Ok(())
    }
}

/// `H`, `J` and the commutation matrix `T` of the lifted problem.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedSystem {
    pub n: usize,
    pub h: DenseMatrix,
    pub j: DenseMatrix,
    pub t: DenseMatrix,
}

impl LiftedSystem {
    pub fn dim(&self) -> usize {
        4 * self.n * self.n
    }

    /// `e^H`, the transition from `y(0)` to `y(1)`.
    pub fn transition(&self) -> Result<DenseMatrix> {
        mat_exp(&self.h, DEFAULT_EXPM_ACCURACY)
    }
}

pub fn build_h(spec: &SystemSpec) -> Result<LiftedSystem> {
    spec.validate()?;
    spec.require_derived_case()?;
    let n = spec.n;
    let n2 = n * n;
    let i_n = DenseMatrix::identity(n);
    let i_n2 = DenseMatrix::identity(n2);
    let left = |m: &DenseMatrix| kron(&m.transpose(), &i_n);
    let right = |m: &DenseMatrix| kron(&i_n, &m.transpose());

    let (a0l, a1l, b0l, b1l) = (
        left(&spec.a0),
        left(&spec.a1),
        left(&spec.b0),
        left(&spec.b1),
    );
    let (na1r, na0r, nb0r, b1r) = (
        -&right(&spec.a1),
        -&right(&spec.a0),
        -&right(&spec.b0),
        right(&spec.b1),
    );
    let pi_i = i_n2.scale(PI);
    let neg_pi_i = i_n2.scale(-PI);
    let h = DenseMatrix::from_blocks(&[
        vec![Some(&a0l), Some(&a1l), Some(&b0l), Some(&b1l)],
        vec![Some(&na1r), Some(&na0r), Some(&nb0r), Some(&b1r)],
        vec![None, None, None, Some(&neg_pi_i)],
        vec![Some(&i_n2), Some(&i_n2), Some(&pi_i), None],
    ])?;

    let t = commutation_matrix(n);
    let j = build_j(&t)?;
    Ok(LiftedSystem { n, h, j, t })
}

fn build_j(t: &DenseMatrix) -> Result<DenseMatrix> {
    let neg_t = -t;
    DenseMatrix::from_blocks(&[
        vec![None, Some(t), None, None],
        vec![Some(t), None, None, None],
        vec![None, None, Some(t), None],
        vec![None, None, None, Some(&neg_t)],
    ])
}

/// Boundary conditions `M y(0) + N y(1) = rhs`, organized in labelled block
/// rows of `n^2` scalar equations each.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryOperator {
    pub m: DenseMatrix,
    pub n: DenseMatrix,
    pub rhs: DenseMatrix,
    pub row_labels: Vec<String>,
}

impl BoundaryOperator {
    pub fn rows(&self) -> usize {
        self.m.rows()
    }

    /// `M + N e^H`, the operator acting on `y(0)`.
    pub fn close(&self, transition: &DenseMatrix) -> Result<DenseMatrix> {
        self.m.try_add(&self.n.matmul(transition)?)
    }

    /// Residual `M y0 + N y1 - rhs`.
    pub fn residual(&self, y0: &DenseMatrix, y1: &DenseMatrix) -> Result<DenseMatrix> {
        self.m
            .matmul(y0)?
            .try_add(&self.n.matmul(y1)?)?
            .try_sub(&self.rhs)
    }

    pub fn stack(&self, below: &BoundaryOperator) -> Result<BoundaryOperator> {
        Ok(BoundaryOperator {
            m: DenseMatrix::vstack(&self.m, &below.m)?,
            n: DenseMatrix::vstack(&self.n, &below.n)?,
            rhs: DenseMatrix::vstack(&self.rhs, &below.rhs)?,
            row_labels: self
                .row_labels
                .iter()
                .chain(&below.row_labels)
                .cloned()
                .collect(),
        })
    }
}

/// Places `blocks[r][c]` (each `n^2 x n^2`) into a `rows*n^2 x 4n^2` matrix.
fn block_rows(n2: usize, rows: usize, blocks: &[(usize, usize, DenseMatrix)]) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(rows * n2, 4 * n2);
    for (r, c, b) in blocks {
        out.set_block(r * n2, c * n2, b);
    }
    out
}

/// The three coupling conditions `Z(0) = V(1)`, `X0(0) = X0(1)^T`,
/// `X1(0) = -X1(1)^T`, taken verbatim (plain identity on the `v(1)` block).
pub fn build_bc_three(spec: &SystemSpec) -> Result<BoundaryOperator> {
    spec.validate()?;
    let n2 = spec.n * spec.n;
    let i = DenseMatrix::identity(n2);
    let t = commutation_matrix(spec.n);
    let m = block_rows(
        n2,
        3,
        &[(0, 0, i.clone()), (1, 2, i.clone()), (2, 3, i.clone())],
    );
    let n = block_rows(n2, 3, &[(0, 1, -&i), (1, 2, -&t), (2, 3, t)]);
    Ok(BoundaryOperator {
        m,
        n,
        rhs: DenseMatrix::zeros(3 * n2, 1),
        row_labels: vec![
            "Z(0) - V(1) = 0".into(),
            "X0(0) - X0(1)^T = 0".into(),
            "X1(0) + X1(1)^T = 0".into(),
        ],
    })
}

/// The squared system: the three couplings with `Z(0) = V(1)^T`, plus
/// `V(0) = Z(1)^T`, i.e. `y(0) - J y(1) = 0`.
pub fn build_bc_squared(spec: &SystemSpec) -> Result<BoundaryOperator> {
    spec.validate()?;
    let n2 = spec.n * spec.n;
    let j = build_j(&commutation_matrix(spec.n))?;
    Ok(BoundaryOperator {
        m: DenseMatrix::identity(4 * n2),
        n: -&j,
        rhs: DenseMatrix::zeros(4 * n2, 1),
        row_labels: vec![
            "Z(0) - V(1)^T = 0".into(),
            "V(0) - Z(1)^T = 0".into(),
            "X0(0) - X0(1)^T = 0".into(),
            "X1(0) + X1(1)^T = 0".into(),
        ],
    })
}

/// The algebraic condition
/// `-W = Z A0 + A0^T Z + V A1 + A1^T V^T + X0 B0 + B0^T X0^T + X1 B1 + B1^T X1^T`
/// at `τ = 0`, all `n^2` scalar equations.
pub fn build_bc_w(spec: &SystemSpec) -> Result<BoundaryOperator> {
    spec.validate()?;
    let n = spec.n;
    let n2 = n * n;
    let i_n = DenseMatrix::identity(n);
    let t = commutation_matrix(n);
    // vec(Z A) = (A^T ⊗ I) z ; vec(A^T Z^T) = (I ⊗ A^T) T z
    let plain = |a: &DenseMatrix| kron(&a.transpose(), &i_n);
    let transposed = |a: &DenseMatrix| &kron(&i_n, &a.transpose()) * &t;
    let m = block_rows(
        n2,
        1,
        &[
            (0, 0, &plain(&spec.a0) + &kron(&i_n, &spec.a0.transpose())),
            (0, 1, &plain(&spec.a1) + &transposed(&spec.a1)),
            (0, 2, &plain(&spec.b0) + &transposed(&spec.b0)),
            (0, 3, &plain(&spec.b1) + &transposed(&spec.b1)),
        ],
    );
    Ok(BoundaryOperator {
        m,
        n: DenseMatrix::zeros(n2, 4 * n2),
        rhs: vec(&(-&spec.w)),
        row_labels: vec!["algebraic condition = -W".into()],
    })
}

/// `||J^T H J + H||_F`.
pub fn lemma1_residual(lift: &LiftedSystem) -> f64 {
    let jt = lift.j.transpose();
    (&(&(&jt * &lift.h) * &lift.j) + &lift.h).frobenius_norm()
}

/// Odd characteristic-polynomial coefficients of `H`, relative to the
/// largest coefficient. Near zero iff the spectrum pairs `λ` with `-λ`.
pub fn spectral_symmetry_check(lift: &LiftedSystem) -> Result<f64> {
    Ok(odd_coefficient_ratio(&char_poly(&lift.h)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Diagnostics {
    /// Rank of `I - J e^H`.
    pub plus: RankDiagnostics,
    /// Rank of `-I - J e^H`.
    pub minus: RankDiagnostics,
    pub expected_nullity: usize,
}

pub fn theorem1_diagnostics(lift: &LiftedSystem, rel_tol: f64) -> Result<Theorem1Diagnostics> {
    let je = &lift.j * &lift.transition()?;
    let id = DenseMatrix::identity(lift.dim());
    Ok(Theorem1Diagnostics {
        plus: numerical_rank(&(&id - &je), rel_tol),
        minus: numerical_rank(&(&(-&id) - &je), rel_tol),
        expected_nullity: 2 * lift.n * lift.n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dependence {
    Dependent,
    Independent,
}

/// Whether the three-row operator annihilates the nullspace of the squared
/// operator, which is what containment of its rows in the squared row space
/// requires.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Containment {
    /// `max ||K3 v||` over an orthonormal nullspace basis of `I - J e^H`.
    pub max_residual: f64,
    pub tolerance: f64,
    pub contained: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corollary1Diagnostics {
    pub three_row: RankDiagnostics,
    pub squared: RankDiagnostics,
    pub row_count: usize,
    pub verdict: Dependence,
    pub containment: Containment,
}

pub fn corollary1_diagnostics(
    lift: &LiftedSystem,
    spec: &SystemSpec,
    rel_tol: f64,
) -> Result<Corollary1Diagnostics> {
    let e = lift.transition()?;
    let k3 = build_bc_three(spec)?.close(&e)?;
    let squared_op = build_bc_squared(spec)?.close(&e)?;
    let three_row = numerical_rank(&k3, rel_tol);

    let zero = DenseMatrix::zeros(squared_op.rows(), 1);
    let squared_ls = min_norm_solve(&squared_op, &zero, rel_tol)?;
    let max_residual = squared_ls
        .nullspace_basis
        .iter()
        .map(|v| (&k3 * &DenseMatrix::column(v).expect("finite basis")).frobenius_norm())
        .fold(0.0, f64::max);
    let tolerance = three_row.tolerance.max(rel_tol);
    let row_count = k3.rows();
    Ok(Corollary1Diagnostics {
        verdict: if three_row.rank < row_count {
            Dependence::Dependent
        } else {
            Dependence::Independent
        },
        three_row,
        squared: squared_ls.rank,
        row_count,
        containment: Containment {
            max_residual,
            tolerance,
            contained: max_residual <= tolerance,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solvability {
    pub operator_rank: RankDiagnostics,
    pub residual_norm: f64,
    pub consistency_tolerance: f64,
    pub consistent: bool,
    pub family_dim: usize,
    /// Lifted initial states `y(0)`; two of them when the family is nontrivial.
    pub sample_solutions: Vec<Vec<f64>>,
}

/// Closed affine system `K y(0) = r`: the algebraic row block over the three
/// coupling blocks.
pub fn full_boundary_operator(spec: &SystemSpec) -> Result<BoundaryOperator> {
    build_bc_w(spec)?.stack(&build_bc_three(spec)?)
}

pub fn bvp_solvability(spec: &SystemSpec, rel_tol: f64) -> Result<Solvability> {
    solvability_for(&build_h(spec)?, spec, rel_tol)
}

/// [`bvp_solvability`] against an already lifted (possibly modified) `H`.
pub fn solvability_for(
    lift: &LiftedSystem,
    spec: &SystemSpec,
    rel_tol: f64,
) -> Result<Solvability> {
    let op = full_boundary_operator(spec)?;
    let k = op.close(&lift.transition()?)?;
    let ls = min_norm_solve(&k, &op.rhs, rel_tol)?;

    let consistency_tolerance = rel_tol * op.rhs.frobenius_norm().max(1.0);
    let consistent = ls.residual_norm <= consistency_tolerance;
    let family_dim = if consistent { ls.rank.nullity } else { 0 };

    let mut sample_solutions = Vec::new();
    if consistent {
        let x0 = ls.solution.col_vec(0);
        if let Some(null) = ls.nullspace_basis.first() {
            let step = ls.solution.frobenius_norm().max(1.0);
            let x1 = x0.iter().zip(null).map(|(a, b)| a + step * b).collect();
            sample_solutions.push(x0);
            sample_solutions.push(x1);
        } else {
            sample_solutions.push(x0);
        }
    }
    Ok(Solvability {
        operator_rank: ls.rank,
        residual_norm: ls.residual_norm,
        consistency_tolerance,
        consistent,
        family_dim,
        sample_solutions,
    })
}
