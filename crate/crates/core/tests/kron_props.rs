mod common;

use lyapaudit::kron::{commutation_matrix, kron, unvec, vec};
use lyapaudit::DenseMatrix;
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = DenseMatrix> {
    prop::collection::vec(-10.0f64..10.0, rows * cols)
        .prop_map(move |d| DenseMatrix::new(rows, cols, d).unwrap())
}

fn shaped() -> impl Strategy<Value = DenseMatrix> {
    (1usize..5, 1usize..5).prop_flat_map(|(r, c)| matrix(r, c))
}

proptest! {
    #[test]
    fn unvec_inverts_vec(m in shaped()) {
        prop_assert_eq!(unvec(&vec(&m), m.rows(), m.cols()).unwrap(), m);
    }

    #[test]
    fn vec_of_triple_product(
        (a, b, c) in (1usize..4, 1usize..4, 1usize..4, 1usize..4)
            .prop_flat_map(|(p, q, r, s)| (matrix(p, q), matrix(q, r), matrix(r, s)))
    ) {
        let lhs = vec(&(&(&a * &b) * &c));
        let rhs = &kron(&c.transpose(), &a) * &vec(&b);
        prop_assert!((&lhs - &rhs).max_abs() <= 1e-12 * lhs.max_abs().max(1.0));
    }

    #[test]
    fn commutation_swaps_kronecker_factors(
        (a, c) in (1usize..4).prop_flat_map(|n| (matrix(n, n), matrix(n, n)))
    ) {
        let t = commutation_matrix(a.rows());
        let lhs = &(&t * &kron(&a, &c.transpose())) * &t;
        prop_assert_eq!(lhs, kron(&c.transpose(), &a));
    }

    #[test]
    fn commutation_transposes(m in (1usize..5).prop_flat_map(|n| matrix(n, n))) {
        let t = commutation_matrix(m.rows());
        prop_assert_eq!(&t * &vec(&m), vec(&m.transpose()));
    }
}

#[test]
fn commutation_is_symmetric_involution() {
    for n in 1..=6 {
        let t = commutation_matrix(n);
        assert_eq!(t, t.transpose());
        assert_eq!(&t * &t, DenseMatrix::identity(n * n));
        assert!(t.as_slice().iter().all(|&x| x == 0.0 || x == 1.0));
    }
}
