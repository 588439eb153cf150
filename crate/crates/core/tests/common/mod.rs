//! Test oracles, written directly against the penalized objective and kept
//! independent of the solver code paths.
#![allow(dead_code)]

use imreg_core::{DMatrix, DVector, DatasetBlock, IntegratedDataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub struct Shape {
    pub m: usize,
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub r: usize,
}

pub fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Random dataset: Gaussian designs, sparse-ish truth, unit noise.
pub fn random_instance(shape: &Shape, seed: u64) -> IntegratedDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks = (0..shape.m)
        .map(|_| {
            let x = normal_matrix(&mut rng, shape.n, shape.p);
            let z = normal_matrix(&mut rng, shape.n, shape.r);
            let b = DMatrix::from_fn(shape.p, shape.q, |j, _| if j % 2 == 0 { 1.0 } else { 0.0 });
            let c = DMatrix::from_fn(shape.r, shape.q, |i, k| if (i + k) % 2 == 0 { -0.8 } else { 0.0 });
            let mut y = &x * &b + &z * &c + normal_matrix(&mut rng, shape.n, shape.q) * 0.5;
            y.add_scalar_mut(rng.random_range(-1.0..1.0));
            DatasetBlock::new(y, x, z).unwrap()
        })
        .collect();
    IntegratedDataset::new(blocks).unwrap()
}

/// Objective evaluated entry by entry with plain loops.
pub fn objective_loops(
    data: &IntegratedDataset,
    alpha: &[DVector<f64>],
    b: &[DMatrix<f64>],
    c: &[DMatrix<f64>],
    lambda: f64,
    gamma: f64,
) -> f64 {
    let mut total = 0.0;
    for (m, blk) in data.blocks().iter().enumerate() {
        let mut ss = 0.0;
        for i in 0..blk.n() {
            for k in 0..blk.q() {
                let mut pred = alpha[m][k];
                for j in 0..blk.p() {
                    pred += blk.x()[(i, j)] * b[m][(j, k)];
                }
                for l in 0..blk.r() {
                    pred += blk.z()[(i, l)] * c[m][(l, k)];
                }
                ss += (blk.y()[(i, k)] - pred).powi(2);
            }
        }
        total += ss / (2.0 * blk.n() as f64);
    }
    for j in 0..data.p() {
        for k in 0..data.q() {
            let mut sq = 0.0;
            for bm in b {
                sq += bm[(j, k)] * bm[(j, k)];
            }
            total += lambda * sq.sqrt();
        }
    }
    for cm in c {
        for v in cm.iter() {
            total += gamma * v.abs();
        }
    }
    total
}

/// Per-dataset least squares with intercept from the normal equations of
/// `[1 X Z]`. Returns `(alpha, B, C)` per dataset.
pub fn least_squares(data: &IntegratedDataset) -> Vec<(DVector<f64>, DMatrix<f64>, DMatrix<f64>)> {
    data.blocks()
        .iter()
        .map(|blk| {
            let (n, p, r) = (blk.n(), blk.p(), blk.r());
            let mut w = DMatrix::zeros(n, 1 + p + r);
            for i in 0..n {
                w[(i, 0)] = 1.0;
                for j in 0..p {
                    w[(i, 1 + j)] = blk.x()[(i, j)];
                }
                for l in 0..r {
                    w[(i, 1 + p + l)] = blk.z()[(i, l)];
                }
            }
            let gram = w.transpose() * &w;
            let rhs = w.transpose() * blk.y();
            let theta = gram.lu().solve(&rhs).expect("well-conditioned design");
            let alpha = theta.row(0).transpose();
            let b = theta.rows(1, p).into_owned();
            let c = theta.rows(1 + p, r).into_owned();
            (alpha, b, c)
        })
        .collect()
}

/// Accelerated proximal gradient (FISTA with adaptive restart) on the
/// penalized objective. Returns `(alpha, B, C, objective)`.
pub fn proximal_gradient(
    data: &IntegratedDataset,
    lambda: f64,
    gamma: f64,
    iters: usize,
) -> (Vec<DVector<f64>>, Vec<DMatrix<f64>>, Vec<DMatrix<f64>>, f64) {
    let mm = data.m();
    let q = data.q();
    // Lipschitz constant of the smooth part: max_m ‖[1 X Z]‖² / n_m.
    let mut lip: f64 = 0.0;
    for blk in data.blocks() {
        let (n, p, r) = (blk.n(), blk.p(), blk.r());
        let w = DMatrix::from_fn(n, 1 + p + r, |i, j| {
            if j == 0 {
                1.0
            } else if j <= p {
                blk.x()[(i, j - 1)]
            } else {
                blk.z()[(i, j - 1 - p)]
            }
        });
        let sv = (w.transpose() * &w).symmetric_eigenvalues().max();
        lip = lip.max(sv / n as f64);
    }
    let step = 1.0 / lip;

    let zeros = |rows: usize| DMatrix::<f64>::zeros(rows, q);
    let mut a: Vec<DVector<f64>> = vec![DVector::zeros(q); mm];
    let mut b: Vec<DMatrix<f64>> = vec![zeros(data.p()); mm];
    let mut c: Vec<DMatrix<f64>> = data.blocks().iter().map(|blk| zeros(blk.r())).collect();
    let (mut ya, mut yb, mut yc) = (a.clone(), b.clone(), c.clone());
    let mut t = 1.0f64;
    let mut prev_obj = objective_loops(data, &a, &b, &c, lambda, gamma);

    for _ in 0..iters {
        let mut na = ya.clone();
        let mut nb = yb.clone();
        let mut nc = yc.clone();
        for (m, blk) in data.blocks().iter().enumerate() {
            let mut res = blk.y() - blk.x() * &yb[m] - blk.z() * &yc[m];
            for mut row in res.row_iter_mut() {
                row -= ya[m].transpose();
            }
            let inv_n = 1.0 / blk.n() as f64;
            na[m] += res.row_sum().transpose() * (step * inv_n);
            nb[m] += blk.x().transpose() * &res * (step * inv_n);
            nc[m] += blk.z().transpose() * &res * (step * inv_n);
        }
        for j in 0..data.p() {
            for k in 0..q {
                let norm = nb.iter().map(|x| x[(j, k)].powi(2)).sum::<f64>().sqrt();
                let f = if norm <= step * lambda { 0.0 } else { 1.0 - step * lambda / norm };
                for x in nb.iter_mut() {
                    x[(j, k)] *= f;
                }
            }
        }
        for x in nc.iter_mut() {
            x.apply(|v| {
                let t = step * gamma;
                *v = if *v > t { *v - t } else if *v < -t { *v + t } else { 0.0 };
            });
        }
        let obj = objective_loops(data, &na, &nb, &nc, lambda, gamma);
        let restart = obj > prev_obj;
        let t_next = if restart { 1.0 } else { (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0 };
        let mom = if restart { 0.0 } else { (t - 1.0) / t_next };
        for m in 0..mm {
            ya[m] = &na[m] + (&na[m] - &a[m]) * mom;
            yb[m] = &nb[m] + (&nb[m] - &b[m]) * mom;
            yc[m] = &nc[m] + (&nc[m] - &c[m]) * mom;
        }
        t = t_next;
        a = na;
        b = nb;
        c = nc;
        prev_obj = obj;
    }
    let obj = objective_loops(data, &a, &b, &c, lambda, gamma);
    (a, b, c, obj)
}
