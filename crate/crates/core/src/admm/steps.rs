//! The per-iteration block updates.
//!
//! Every update works from Gram-matrix summaries of its dataset
//! (`XᵀY`, `XᵀZ`, column means, ...) so an iteration costs nothing in `n`,
//! except for wide designs where working through `X` and `Z` is cheaper.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::CachedFactorization;
use crate::model::{DatasetBlock, HyperParams};
use crate::prox;

use super::state::AdmmState;

/// Precomputed quantities for one dataset at a fixed `ρ`.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    n: f64,
    rho: f64,
    y_mean: DVector<f64>,
    x_mean: DVector<f64>,
    z_mean: DVector<f64>,
    xty: DMatrix<f64>,
    zty: DMatrix<f64>,
    cross: Cross,
    factor_x: CachedFactorization,
    factor_z: CachedFactorization,
}

/// How `XᵀZ·C` and `ZᵀX·B` are formed: through the cached `p × r` Gram
/// matrix, or through the raw designs when `n` is smaller than both `p` and
/// `r`.
#[derive(Debug, Clone)]
enum Cross {
    Gram(DMatrix<f64>),
    Raw { x: DMatrix<f64>, z: DMatrix<f64> },
}

impl Cross {
    fn new(x: &DMatrix<f64>, z: &DMatrix<f64>) -> Self {
        let (n, p, r) = (x.nrows(), x.ncols(), z.ncols());
        if n * (p + r) < p * r {
            Cross::Raw { x: x.clone(), z: z.clone() }
        } else {
            Cross::Gram(x.tr_mul(z))
        }
    }

    /// `out −= XᵀZ·c`
    fn sub_xtz_times(&self, out: &mut DMatrix<f64>, c: &DMatrix<f64>) {
        match self {
            Cross::Gram(g) => out.gemm(-1.0, g, c, 1.0),
            Cross::Raw { x, z } => out.gemm_tr(-1.0, x, &(z * c), 1.0),
        }
    }

    /// `out −= ZᵀX·b`
    fn sub_ztx_times(&self, out: &mut DMatrix<f64>, b: &DMatrix<f64>) {
        match self {
            Cross::Gram(g) => out.gemm_tr(-1.0, g, b, 1.0),
            Cross::Raw { x, z } => out.gemm_tr(-1.0, z, &(x * b), 1.0),
        }
    }
}

fn column_means(a: &DMatrix<f64>) -> DVector<f64> {
    let n = a.nrows() as f64;
    DVector::from_iterator(a.ncols(), a.column_iter().map(|c| c.sum() / n))
}

impl BlockSystem {
    pub fn new(block: &DatasetBlock, rho: f64) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(Error::InvalidArgument(format!("rho must be > 0, got {rho}")));
        }
        let n = block.n() as f64;
        let shift = n * rho;
        Ok(Self {
            n,
            rho,
            y_mean: column_means(block.y()),
            x_mean: column_means(block.x()),
            z_mean: column_means(block.z()),
            xty: block.x().tr_mul(block.y()),
            zty: block.z().tr_mul(block.y()),
            cross: Cross::new(block.x(), block.z()),
            factor_x: CachedFactorization::ridge_gram(block.x(), shift)?,
            factor_z: CachedFactorization::ridge_gram(block.z(), shift)?,
        })
    }

    pub fn r(&self) -> usize {
        self.z_mean.len()
    }

    pub fn p(&self) -> usize {
        self.x_mean.len()
    }

    /// Step (a): column means of `Y − XB − ZC`.
    pub fn update_alpha(&self, b: &DMatrix<f64>, c: &DMatrix<f64>) -> DVector<f64> {
        let mut alpha = self.y_mean.clone();
        alpha.gemv_tr(-1.0, b, &self.x_mean, 1.0);
        if self.r() > 0 {
            alpha.gemv_tr(-1.0, c, &self.z_mean, 1.0);
        }
        alpha
    }

    /// Step (b): `(XᵀX + nρI)⁻¹ [Xᵀ(Y − 1αᵀ − ZC) + nρ(H + U)]`.
    pub fn update_b(
        &self,
        alpha: &DVector<f64>,
        c: &DMatrix<f64>,
        h: &DMatrix<f64>,
        u: &DMatrix<f64>,
    ) -> DMatrix<f64> {
        let mut rhs = self.xty.clone();
        // Xᵀ1 = n·x̄
        rhs.ger(-self.n, &self.x_mean, alpha, 1.0);
        if self.r() > 0 {
            self.cross.sub_xtz_times(&mut rhs, c);
        }
        let w = self.n * self.rho;
        rhs += (h + u) * w;
        self.factor_x.solve(&rhs)
    }

    /// Step (c): `(ZᵀZ + nρI)⁻¹ [Zᵀ(Y − 1αᵀ − XB) + nρ(D − V)]`.
    pub fn update_c(
        &self,
        alpha: &DVector<f64>,
        b: &DMatrix<f64>,
        d: &DMatrix<f64>,
        v: &DMatrix<f64>,
    ) -> Result<DMatrix<f64>> {
        if self.r() == 0 {
            return Err(Error::InvalidArgument(
                "dataset has no specific covariates; the C update must be skipped".into(),
            ));
        }
        let mut rhs = self.zty.clone();
        rhs.ger(-self.n, &self.z_mean, alpha, 1.0);
        self.cross.sub_ztx_times(&mut rhs, b);
        let w = self.n * self.rho;
        rhs += (d - v) * w;
        Ok(self.factor_z.solve(&rhs))
    }
}

/// Step (d): entrywise `S(C + V, γ/ρ)`.
pub fn update_d(c_next: &DMatrix<f64>, v_prev: &DMatrix<f64>, hp: &HyperParams) -> DMatrix<f64> {
    let t = hp.gamma / hp.rho;
    c_next.zip_map(v_prev, |c, v| prox::shrink(c + v, t))
}

/// Step (e): group soft-threshold of `β_jk − u_jk` with threshold `λ/ρ`, for
/// every `(j, k)`. The result for a group is written into all `M` consensus
/// matrices, so a group is either zero in every dataset or in none.
pub fn update_eta(b_next: &[DMatrix<f64>], u_prev: &[DMatrix<f64>], hp: &HyperParams) -> Vec<DMatrix<f64>> {
    let t = hp.lambda / hp.rho;
    let mut h: Vec<DMatrix<f64>> = b_next.iter().zip(u_prev).map(|(b, u)| b - u).collect();
    let Some(first) = h.first() else { return h };
    let (p, q) = first.shape();
    let mut group = vec![0.0; h.len()];
    for k in 0..q {
        for j in 0..p {
            for (g, hm) in group.iter_mut().zip(&h) {
                *g = hm[(j, k)];
            }
            prox::group_shrink(&mut group, t);
            for (g, hm) in group.iter().zip(h.iter_mut()) {
                hm[(j, k)] = *g;
            }
        }
    }
    h
}

/// Steps (f) and (g): `u ← u + η − β`, `V ← V + C − D`.
pub fn update_duals(state: &mut AdmmState) {
    for m in 0..state.u.len() {
        state.u[m] += &state.h[m] - &state.b[m];
        state.v[m] += &state.c[m] - &state.d[m];
    }
}

/// One full pass of steps (a) through (g).
pub(crate) fn iterate(systems: &[BlockSystem], state: &mut AdmmState, hp: &HyperParams) {
    for (m, sys) in systems.iter().enumerate() {
        state.alpha[m] = sys.update_alpha(&state.b[m], &state.c[m]);
        state.b[m] = sys.update_b(&state.alpha[m], &state.c[m], &state.h[m], &state.u[m]);
        if sys.r() > 0 {
            state.c[m] = sys
                .update_c(&state.alpha[m], &state.b[m], &state.d[m], &state.v[m])
                .expect("r > 0 checked");
            state.d[m] = update_d(&state.c[m], &state.v[m], hp);
        }
    }
    state.h = update_eta(&state.b, &state.u, hp);
    update_duals(state);
    state.iter += 1;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_block(y: f64, x: Option<f64>, z: Option<f64>) -> DatasetBlock {
        let xm = x.map_or(DMatrix::zeros(1, 0), |v| DMatrix::from_element(1, 1, v));
        let zm = z.map_or(DMatrix::zeros(1, 0), |v| DMatrix::from_element(1, 1, v));
        DatasetBlock::new(DMatrix::from_element(1, 1, y), xm, zm).unwrap()
    }

    #[test]
    fn scalar_b_update() {
        // (1 + 1)⁻¹ · 2 = 1
        let sys = BlockSystem::new(&scalar_block(2.0, Some(1.0), None), 1.0).unwrap();
        let b = sys.update_b(
            &DVector::zeros(1),
            &DMatrix::zeros(0, 1),
            &DMatrix::zeros(1, 1),
            &DMatrix::zeros(1, 1),
        );
        assert!((b[(0, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn scalar_c_update() {
        // (1 + 1)⁻¹ (3 + 1) = 2
        let sys = BlockSystem::new(&scalar_block(3.0, None, Some(1.0)), 1.0).unwrap();
        let c = sys
            .update_c(
                &DVector::zeros(1),
                &DMatrix::zeros(0, 1),
                &DMatrix::from_element(1, 1, 1.0),
                &DMatrix::zeros(1, 1),
            )
            .unwrap();
        assert!((c[(0, 0)] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn c_update_requires_specific_covariates() {
        let sys = BlockSystem::new(&scalar_block(3.0, Some(1.0), None), 1.0).unwrap();
        let res = sys.update_c(&DVector::zeros(1), &DMatrix::zeros(1, 1), &DMatrix::zeros(0, 1), &DMatrix::zeros(0, 1));
        assert!(res.is_err());
    }

    #[test]
    fn d_update_cases() {
        let hp = HyperParams::new(0.0, 0.0).unwrap();
        let c = DMatrix::from_row_slice(2, 1, &[0.3, -2.0]);
        let v = DMatrix::from_row_slice(2, 1, &[0.1, 0.5]);
        assert_eq!(update_d(&c, &v, &hp), &c + &v);
        let hp = HyperParams::new(0.0, 1.0).unwrap();
        let d = update_d(&DMatrix::from_element(1, 1, 3.0), &DMatrix::zeros(1, 1), &hp);
        assert_eq!(d[(0, 0)], 2.0);
    }

    #[test]
    fn eta_update_cases() {
        let b = vec![DMatrix::from_element(1, 1, 3.0), DMatrix::from_element(1, 1, 4.0)];
        let u = vec![DMatrix::zeros(1, 1), DMatrix::zeros(1, 1)];
        let h = update_eta(&b, &u, &HyperParams::new(5.0, 0.0).unwrap());
        assert!(h.iter().all(|m| m[(0, 0)] == 0.0));
        let u = vec![DMatrix::from_element(1, 1, 0.5), DMatrix::from_element(1, 1, -1.0)];
        let h = update_eta(&b, &u, &HyperParams::new(0.0, 0.0).unwrap());
        assert_eq!(h[0][(0, 0)], 2.5);
        assert_eq!(h[1][(0, 0)], 5.0);
    }

    #[test]
    fn duals_fixed_point_and_increment() {
        let data = crate::model::IntegratedDataset::new(vec![scalar_block(1.0, Some(1.0), Some(1.0))]).unwrap();
        let mut s = AdmmState::zeros(&data);
        s.b[0][(0, 0)] = 2.0;
        s.h[0][(0, 0)] = 2.0;
        s.c[0][(0, 0)] = -1.0;
        s.d[0][(0, 0)] = -1.0;
        s.u[0][(0, 0)] = 0.3;
        update_duals(&mut s);
        assert_eq!(s.u[0][(0, 0)], 0.3);
        assert_eq!(s.v[0][(0, 0)], 0.0);
        s.h[0][(0, 0)] = 2.5;
        s.u[0][(0, 0)] = 0.0;
        update_duals(&mut s);
        assert_eq!(s.u[0][(0, 0)], 0.5);
    }
}
