//! Simulated data.
//!
//! Every random draw comes from a ChaCha8 generator keyed by the scenario seed
//! mixed with an FNV-1a hash of the scenario name, on a stream that encodes
//! `(replicate, dataset, purpose)`:
//!
//! ```text
//! stream = replicate << 16 | dataset << 4 | purpose
//! ```
//!
//! with purpose 0 = training design, 1 = training noise, 2 = test design,
//! 3 = test noise. Replicates therefore draw independently of how they are
//! scheduled across threads.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::model::{DatasetBlock, IntegratedDataset};

use super::config::SimConfig;
use super::truth::{truth, TruthSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Purpose {
    TrainDesign = 0,
    TrainNoise = 1,
    TestDesign = 2,
    TestNoise = 3,
}

fn fnv1a(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

fn stream_rng(cfg: &SimConfig, replicate: usize, dataset: usize, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ fnv1a(&cfg.name()));
    rng.set_stream(((replicate as u64) << 16) | ((dataset as u64) << 4) | purpose as u64);
    rng
}

/// `n` rows from `N(0, Σ)` with `Σ_ij = ρ^{|i−j|}`, via the Cholesky factor of Σ.
pub fn gen_ar1_rows<R: Rng + ?Sized>(n: usize, dim: usize, rho: f64, rng: &mut R) -> DMatrix<f64> {
    let sigma = DMatrix::from_fn(dim, dim, |i, j| rho.powi(i.abs_diff(j) as i32));
    let l = sigma
        .cholesky()
        .expect("AR(1) covariance is positive definite for |rho| < 1")
        .unpack();
    let z = DMatrix::from_fn(n, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    z * l.transpose()
}

fn iid_normal<R: Rng + ?Sized>(n: usize, dim: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(n, dim, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// `[AR(1) block of 10 | i.i.d. N(0,1) block of s]`.
fn design<R: Rng + ?Sized>(n: usize, s: usize, rho_x: f64, rng: &mut R) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(n, 10 + s);
    out.columns_mut(0, 10).copy_from(&gen_ar1_rows(n, 10, rho_x, rng));
    out.columns_mut(10, s).copy_from(&iid_normal(n, s, rng));
    out
}

/// Training data, held-out test data (`n_test` rows per dataset) and truth
/// for one replicate.
#[derive(Debug, Clone)]
pub struct SimData {
    pub train: IntegratedDataset,
    pub test: IntegratedDataset,
    pub truth: TruthSet,
}

fn draw(cfg: &SimConfig, truth: &TruthSet, replicate: usize, n: usize, test: bool) -> Result<IntegratedDataset> {
    let (dp, np) = if test {
        (Purpose::TestDesign, Purpose::TestNoise)
    } else {
        (Purpose::TrainDesign, Purpose::TrainNoise)
    };
    let design_rep = if cfg.fixed_design { 0 } else { replicate };
    let blocks = (0..cfg.m)
        .map(|m| {
            let mut rng = stream_rng(cfg, design_rep, m, dp);
            let x = design(n, cfg.s, cfg.rho_x, &mut rng);
            let z = design(n, cfg.s, cfg.rho_x, &mut rng);
            let mut noise_rng = stream_rng(cfg, replicate, m, np);
            let e = gen_ar1_rows(n, 2, cfg.rho_y, &mut noise_rng);
            let y = &x * &truth.b_star + &z * &truth.c_star[m] + e;
            DatasetBlock::new(y, x, z)
        })
        .collect::<Result<Vec<_>>>()?;
    IntegratedDataset::new(blocks)
}

/// Draw replicate `replicate` of scenario `cfg`. True intercepts are zero.
pub fn generate(cfg: &SimConfig, replicate: usize) -> Result<SimData> {
    cfg.validate()?;
    let truth = truth(cfg.m, cfg.s)?;
    Ok(SimData {
        train: draw(cfg, &truth, replicate, cfg.n, false)?,
        test: draw(cfg, &truth, replicate, cfg.n_test, true)?,
        truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_cov(x: &DMatrix<f64>) -> DMatrix<f64> {
        let n = x.nrows() as f64;
        let mut c = x.clone();
        for mut col in c.column_iter_mut() {
            let mean = col.mean();
            col.add_scalar_mut(-mean);
        }
        c.tr_mul(&c) / (n - 1.0)
    }

    #[test]
    fn independent_rows_have_identity_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cov = sample_cov(&gen_ar1_rows(100_000, 4, 0.0, &mut rng));
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!(cov[(i, j)].abs() <= 0.02, "cov[{i},{j}] = {}", cov[(i, j)]);
                }
            }
            assert!((cov[(i, i)] - 1.0).abs() <= 0.02);
        }
    }

    #[test]
    fn lag_one_correlation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cov = sample_cov(&gen_ar1_rows(100_000, 5, 0.9, &mut rng));
        for i in 0..4 {
            let corr = cov[(i, i + 1)] / (cov[(i, i)] * cov[(i + 1, i + 1)]).sqrt();
            assert!((corr - 0.9).abs() <= 0.01, "lag-1 corr {corr}");
        }
    }

    #[test]
    fn scalar_dimension_is_standard_normal() {
        let mut a = ChaCha8Rng::seed_from_u64(3);
        let mut b = ChaCha8Rng::seed_from_u64(3);
        let x = gen_ar1_rows(50, 1, 0.7, &mut a);
        let z = iid_normal(50, 1, &mut b);
        assert!((x - z).amax() < 1e-15);
    }

    #[test]
    fn shapes_and_determinism() {
        let mut cfg = SimConfig::new(3, 15, 5, 0.1, 0.9, 11).unwrap();
        cfg.n_test = 40;
        let a = generate(&cfg, 2).unwrap();
        let b = generate(&cfg, 2).unwrap();
        assert_eq!(a.train, b.train);
        assert_eq!(a.test, b.test);
        assert_eq!(a.train.m(), 3);
        for blk in a.train.blocks() {
            assert_eq!(blk.x().shape(), (15, 15));
            assert_eq!(blk.z().shape(), (15, 15));
            assert_eq!(blk.y().shape(), (15, 2));
        }
        assert_eq!(a.test.block(0).n(), 40);
        assert_ne!(generate(&cfg, 3).unwrap().train, a.train);
    }

    #[test]
    fn fixed_design_only_redraws_noise() {
        let mut cfg = SimConfig::new(2, 10, 5, 0.1, 0.1, 5).unwrap();
        cfg.fixed_design = true;
        let a = generate(&cfg, 0).unwrap();
        let b = generate(&cfg, 1).unwrap();
        assert_eq!(a.train.block(0).x(), b.train.block(0).x());
        assert_ne!(a.train.block(0).y(), b.train.block(0).y());
    }
}
