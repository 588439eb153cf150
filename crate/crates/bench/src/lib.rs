//! Benchmark inputs shared by the criterion benches.

use imreg_core::{DMatrix, DatasetBlock, IntegratedDataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Gaussian designs with a few active shared and specific covariates.
pub fn dataset(m: usize, n: usize, p: usize, q: usize, r: usize, seed: u64) -> IntegratedDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = |rows: usize, cols: usize| DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal));
    let blocks = (0..m)
        .map(|_| {
            let x = normal(n, p);
            let z = normal(n, r);
            let b = DMatrix::from_fn(p, q, |j, _| if j < 5 { 1.0 } else { 0.0 });
            let c = DMatrix::from_fn(r, q, |l, k| if l == k { 0.8 } else { 0.0 });
            let y = &x * &b + &z * &c + normal(n, q);
            DatasetBlock::new(y, x, z).expect("consistent shapes")
        })
        .collect();
    IntegratedDataset::new(blocks).expect("consistent blocks")
}
