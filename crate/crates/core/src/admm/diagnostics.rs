use nalgebra::DMatrix;

use crate::error::Result;
use crate::model::{self, HyperParams, IntegratedDataset, ModelFit};

/// Loss gradients at a fit: `∂/∂α^m`, `∂/∂B^m` and `∂/∂C^m` of the squared-error term.
pub fn loss_gradients(
    data: &IntegratedDataset,
    fit: &ModelFit,
) -> Result<Vec<(nalgebra::DVector<f64>, DMatrix<f64>, DMatrix<f64>)>> {
    model::loss(data, fit)?;
    Ok(data
        .blocks()
        .iter()
        .enumerate()
        .map(|(m, block)| {
            let r = model::residual_unchecked(block, &fit.alpha()[m], &fit.b()[m], &fit.c()[m]);
            let scale = -1.0 / block.n() as f64;
            let ga = r.row_sum().transpose() * scale;
            let gb = block.x().tr_mul(&r) * scale;
            let gc = block.z().tr_mul(&r) * scale;
            (ga, gb, gc)
        })
        .collect())
}

/// Largest violation of the first-order optimality conditions of the
/// penalized objective at `fit`.
///
/// - intercepts: `|∂loss/∂α|`
/// - nonzero group `β_jk`: `‖g_jk + λ β_jk/‖β_jk‖‖`
/// - zero group: `(‖g_jk‖ − λ)₊`
/// - entries of `C` likewise with `γ·sign(c)` and `(|g| − γ)₊`
pub fn kkt_residual(data: &IntegratedDataset, fit: &ModelFit, hp: &HyperParams) -> Result<f64> {
    hp.validate()?;
    let grads = loss_gradients(data, fit)?;
    let mut worst: f64 = 0.0;

    for (ga, _, _) in &grads {
        worst = worst.max(ga.amax());
    }

    let (p, q) = (data.p(), data.q());
    let mut g = vec![0.0; data.m()];
    let mut beta = vec![0.0; data.m()];
    for k in 0..q {
        for j in 0..p {
            for m in 0..data.m() {
                g[m] = grads[m].1[(j, k)];
                beta[m] = fit.b()[m][(j, k)];
            }
            let bnorm = beta.iter().map(|v| v * v).sum::<f64>().sqrt();
            let viol = if bnorm > 0.0 {
                g.iter()
                    .zip(&beta)
                    .map(|(gi, bi)| (gi + hp.lambda * bi / bnorm).powi(2))
                    .sum::<f64>()
                    .sqrt()
            } else {
                (g.iter().map(|v| v * v).sum::<f64>().sqrt() - hp.lambda).max(0.0)
            };
            worst = worst.max(viol);
        }
    }

    for (m, (_, _, gc)) in grads.iter().enumerate() {
        for (gi, ci) in gc.iter().zip(fit.c()[m].iter()) {
            let viol = if *ci != 0.0 {
                (gi + hp.gamma * ci.signum()).abs()
            } else {
                (gi.abs() - hp.gamma).max(0.0)
            };
            worst = worst.max(viol);
        }
    }
    Ok(worst)
}
