use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::linalg::DenseMatrix;

/// Entries drawn uniformly from `±√(6 / (rows + cols))`.
pub fn xavier_init(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    xavier_with(rows, cols, &mut rng)
}

pub(crate) fn xavier_with(rows: usize, cols: usize, rng: &mut Xoshiro256PlusPlus) -> DenseMatrix {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let dist = Uniform::new_inclusive(-bound, bound);
    let data = (0..rows * cols).map(|_| dist.sample(rng)).collect();
    DenseMatrix::from_vec(rows, cols, data).unwrap()
}
