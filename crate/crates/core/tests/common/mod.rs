#![allow(dead_code)]

use lyapaudit::lifted::SystemSpec;
use lyapaudit::DenseMatrix;
use rand::rngs::StdRng;
use rand::Rng;

pub fn random_matrix(rng: &mut StdRng, rows: usize, cols: usize) -> DenseMatrix {
    let data = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
    DenseMatrix::new(rows, cols, data).unwrap()
}

pub fn random_symmetric(rng: &mut StdRng, n: usize) -> DenseMatrix {
    let a = random_matrix(rng, n, n);
    let mut s = &a + &a.transpose();
    // enforce exact symmetry
    for i in 0..n {
        for j in 0..i {
            s[(i, j)] = s[(j, i)];
        }
    }
    s
}

pub fn random_spec(rng: &mut StdRng, n: usize) -> SystemSpec {
    SystemSpec::new(
        random_matrix(rng, n, n),
        random_matrix(rng, n, n),
        random_matrix(rng, n, n),
        random_matrix(rng, n, n),
        random_symmetric(rng, n),
    )
    .unwrap()
}

pub fn scalar(x: f64) -> DenseMatrix {
    DenseMatrix::from_rows(&[vec![x]]).unwrap()
}

/// A0 = -1, everything else zero, W = 1.
pub fn scalar_toy() -> SystemSpec {
    SystemSpec::new(
        scalar(-1.0),
        scalar(0.0),
        scalar(0.0),
        scalar(0.0),
        scalar(1.0),
    )
    .unwrap()
}

/// n = 2, A0 = -I, no delay terms, W = I.
pub fn delay_free_2() -> SystemSpec {
    let z = DenseMatrix::zeros(2, 2);
    SystemSpec::new(
        DenseMatrix::identity(2).scale(-1.0),
        z.clone(),
        z.clone(),
        z,
        DenseMatrix::identity(2),
    )
    .unwrap()
}
