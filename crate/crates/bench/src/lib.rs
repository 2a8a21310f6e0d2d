//! Seeded inputs shared by the benchmarks.

use blackmodel_core::lpfloat::Matrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn gaussian(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    Matrix::new(rows, cols, gaussian(rows * cols, seed)).expect("shape matches data")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_inputs_repeat() {
        assert_eq!(gaussian(16, 3), gaussian(16, 3));
        assert_ne!(gaussian(16, 3), gaussian(16, 4));
        let m = gaussian_matrix(3, 5, 1);
        assert_eq!((m.rows, m.cols), (3, 5));
    }
}
