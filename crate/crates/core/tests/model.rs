mod common;

use common::{random_instance, Shape};
use imreg_core::model::loss;
use imreg_core::{objective, DMatrix, DVector, DatasetBlock, HyperParams, IntegratedDataset, ModelFit};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn shape() -> Shape {
    Shape { m: 3, n: 10, p: 4, q: 2, r: 3 }
}

fn random_fit(data: &IntegratedDataset, rng: &mut ChaCha8Rng) -> ModelFit {
    let q = data.q();
    let alpha = (0..data.m()).map(|_| DVector::from_fn(q, |_, _| rng.random_range(-1.0..1.0))).collect();
    let b = (0..data.m()).map(|_| DMatrix::from_fn(data.p(), q, |_, _| rng.random_range(-1.0..1.0))).collect();
    let c = data.r().iter().map(|&r| DMatrix::from_fn(r, q, |_, _| rng.random_range(-1.0..1.0))).collect();
    ModelFit::new(alpha, b, c).unwrap()
}

fn permute<T: Clone>(v: &[T], order: &[usize]) -> Vec<T> {
    order.iter().map(|&i| v[i].clone()).collect()
}

#[test]
fn objective_is_invariant_to_dataset_order() {
    let data = random_instance(&shape(), 1);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let hp = HyperParams::new(0.4, 0.2).unwrap();
    for order in [[1, 0, 2], [2, 1, 0], [1, 2, 0]] {
        let fit = random_fit(&data, &mut rng);
        let (a, b, c) = fit.clone().into_parts();
        let moved = ModelFit::new(permute(&a, &order), permute(&b, &order), permute(&c, &order)).unwrap();
        let before = objective(&data, &fit, &hp).unwrap();
        let after = objective(&data.permuted(&order).unwrap(), &moved, &hp).unwrap();
        assert!((before - after).abs() <= 1e-12 * before, "{before} vs {after}");
    }
}

#[test]
fn zero_penalties_leave_pure_loss() {
    let data = random_instance(&shape(), 2);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let fit = random_fit(&data, &mut rng);
    let zero = HyperParams::new(0.0, 0.0).unwrap();
    assert_eq!(objective(&data, &fit, &zero).unwrap(), loss(&data, &fit).unwrap());
}

#[test]
fn coefficients_on_a_perfect_fit_raise_the_objective() {
    // Y = 1α' exactly, so the intercept-only fit has zero loss.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let blocks = (0..2)
        .map(|_| {
            let x = DMatrix::from_fn(6, 3, |_, _| rng.random_range(-1.0..1.0));
            let z = DMatrix::from_fn(6, 2, |_, _| rng.random_range(-1.0..1.0));
            DatasetBlock::new(DMatrix::from_fn(6, 2, |_, k| k as f64 + 0.5), x, z).unwrap()
        })
        .collect();
    let data = IntegratedDataset::new(blocks).unwrap();
    let alpha = vec![DVector::from_vec(vec![0.5, 1.5]); 2];
    let base = ModelFit::new(alpha.clone(), vec![DMatrix::zeros(3, 2); 2], vec![DMatrix::zeros(2, 2); 2]).unwrap();
    let hp = HyperParams::new(0.1, 0.1).unwrap();
    assert_eq!(objective(&data, &base, &hp).unwrap(), 0.0);
    for _ in 0..50 {
        let mut b = vec![DMatrix::zeros(3, 2); 2];
        let mut c = vec![DMatrix::zeros(2, 2); 2];
        let m = rng.random_range(0..2);
        let v = rng.random_range(-1.0..1.0) * 1e-3;
        if rng.random_bool(0.5) {
            b[m][(rng.random_range(0..3), rng.random_range(0..2))] = v;
        } else {
            c[m][(rng.random_range(0..2), rng.random_range(0..2))] = v;
        }
        let fit = ModelFit::new(alpha.clone(), b, c).unwrap();
        assert!(objective(&data, &fit, &hp).unwrap() > 0.0);
    }
}

#[test]
fn objective_is_convex_along_segments() {
    let data = random_instance(&shape(), 4);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let hp = HyperParams::new(0.3, 0.5).unwrap();
    for _ in 0..200 {
        let f1 = random_fit(&data, &mut rng);
        let f2 = random_fit(&data, &mut rng);
        let t: f64 = rng.random_range(0.0..1.0);
        let mix = |a: &[DMatrix<f64>], b: &[DMatrix<f64>]| -> Vec<DMatrix<f64>> {
            a.iter().zip(b).map(|(x, y)| x * t + y * (1.0 - t)).collect()
        };
        let alpha = f1.alpha().iter().zip(f2.alpha()).map(|(x, y)| x * t + y * (1.0 - t)).collect();
        let between = ModelFit::new(alpha, mix(f1.b(), f2.b()), mix(f1.c(), f2.c())).unwrap();
        let lhs = objective(&data, &between, &hp).unwrap();
        let rhs = t * objective(&data, &f1, &hp).unwrap() + (1.0 - t) * objective(&data, &f2, &hp).unwrap();
        assert!(lhs <= rhs + 1e-10, "{lhs} > {rhs}");
    }
}
