use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{self, HyperParams, IntegratedDataset};

/// Full ADMM iterate: primal blocks, consensus copies and scaled duals.
///
/// `h[m][(j, k)]` is the m-th entry of the consensus group vector for
/// coefficient `(j, k)`; `u` is laid out the same way.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub alpha: Vec<DVector<f64>>,
    pub b: Vec<DMatrix<f64>>,
    pub c: Vec<DMatrix<f64>>,
    pub h: Vec<DMatrix<f64>>,
    pub u: Vec<DMatrix<f64>>,
    pub d: Vec<DMatrix<f64>>,
    pub v: Vec<DMatrix<f64>>,
    pub iter: usize,
}

impl AdmmState {
    pub fn zeros(data: &IntegratedDataset) -> Self {
        let (p, q) = (data.p(), data.q());
        let pq = vec![DMatrix::zeros(p, q); data.m()];
        let rq: Vec<DMatrix<f64>> = data.blocks().iter().map(|b| DMatrix::zeros(b.r(), q)).collect();
        Self {
            alpha: vec![DVector::zeros(q); data.m()],
            b: pq.clone(),
            c: rq.clone(),
            h: pq.clone(),
            u: pq,
            d: rq.clone(),
            v: rq,
            iter: 0,
        }
    }

    pub fn check_against(&self, data: &IntegratedDataset) -> Result<()> {
        let m = data.m();
        let lens = [
            self.alpha.len(),
            self.b.len(),
            self.c.len(),
            self.h.len(),
            self.u.len(),
            self.d.len(),
            self.v.len(),
        ];
        if lens.iter().any(|&l| l != m) {
            return Err(Error::Dimension(format!("state holds {lens:?} blocks, data has {m}")));
        }
        let (p, q) = (data.p(), data.q());
        for (i, block) in data.blocks().iter().enumerate() {
            let r = block.r();
            let ok = self.alpha[i].len() == q
                && [&self.b[i], &self.h[i], &self.u[i]].iter().all(|x| x.shape() == (p, q))
                && [&self.c[i], &self.d[i], &self.v[i]].iter().all(|x| x.shape() == (r, q));
            if !ok {
                return Err(Error::Dimension(format!("state block {i} does not match dataset {i}")));
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.alpha.iter().all(|a| a.iter().all(|v| v.is_finite()))
            && [&self.b, &self.c, &self.h, &self.u, &self.d, &self.v]
                .iter()
                .all(|set| set.iter().all(|mat| mat.iter().all(|v| v.is_finite())))
    }

    /// Largest constraint violation: `max_jk ‖η_jk − β_jk‖₂` and `max_m ‖C^m − D^m‖_F`.
    pub fn consensus_gap(&self) -> f64 {
        let mut gap: f64 = 0.0;
        if let Some(first) = self.b.first() {
            let (p, q) = first.shape();
            for k in 0..q {
                for j in 0..p {
                    let g = self
                        .b
                        .iter()
                        .zip(&self.h)
                        .map(|(b, h)| (h[(j, k)] - b[(j, k)]).powi(2))
                        .sum::<f64>()
                        .sqrt();
                    gap = gap.max(g);
                }
            }
        }
        for (c, d) in self.c.iter().zip(&self.d) {
            gap = gap.max((c - d).norm());
        }
        gap
    }
}

/// Scaled augmented Lagrangian:
///
/// ```text
/// loss(α, B, C) + λ Σ‖η_jk‖₂ + γ Σ‖D^m‖₁
///     + ρ/2 Σ_jk ‖η_jk − β_jk + u_jk‖² + ρ/2 Σ_m ‖C^m − D^m + V^m‖²_F
/// ```
pub fn augmented_lagrangian(data: &IntegratedDataset, state: &AdmmState, hp: &HyperParams) -> Result<f64> {
    hp.validate()?;
    state.check_against(data)?;
    Ok(lagrangian_unchecked(data, state, hp))
}

pub(crate) fn lagrangian_unchecked(data: &IntegratedDataset, state: &AdmmState, hp: &HyperParams) -> f64 {
    let loss = model::loss_parts(data, &state.alpha, &state.b, &state.c);
    let mut coupling = 0.0;
    for m in 0..data.m() {
        coupling += (&state.h[m] - &state.b[m] + &state.u[m]).norm_squared();
        coupling += (&state.c[m] - &state.d[m] + &state.v[m]).norm_squared();
    }
    loss + hp.lambda * model::group_norm_sum(&state.h) + hp.gamma * model::l1_sum(&state.d) + 0.5 * hp.rho * coupling
}
