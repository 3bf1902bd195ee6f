//! Fixtures shared by the benchmarks.

use split_decision::linalg::Matrix;
use split_decision::RngStream;
use rand::Rng;

/// A well-conditioned SPD matrix `I + sum of d outer products`.
pub fn spd_matrix(dim: usize, seed: u64) -> Matrix {
    let mut rng = RngStream::new(seed, 0);
    let mut m = Matrix::identity(dim);
    for _ in 0..dim {
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        m.scale_add_outer(1.0, &x);
    }
    m
}

pub fn context(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = RngStream::new(seed, 1);
    (0..dim).map(|_| rng.random_range(0.0..1.0)).collect()
}
