//! Data model for multi-dataset multivariate regression.
//!
//! Each of the `M` datasets carries responses `Y` (n × q), shared covariates
//! `X` (n × p) and dataset-specific covariates `Z` (n × r). The fitted model is
//!
//! ```text
//! Y^m ≈ 1 α^mᵀ + X^m B^m + Z^m C^m
//! ```
//!
//! and is scored by the penalized objective
//!
//! ```text
//! Σ_m 1/(2 n_m) ‖Y^m − 1α^mᵀ − X^m B^m − Z^m C^m‖²_F
//!     + λ Σ_{j,k} ‖(B^1_jk, …, B^M_jk)‖₂ + γ Σ_m ‖C^m‖₁
//! ```
//!
//! The group norm runs over the length-M vector gathering entry `(j, k)`
//! across datasets, which is what ties the zero patterns of the `B^m`
//! together. No `√M` group-size weight is applied.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One dataset: responses, shared covariates, dataset-specific covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBlock {
    y: DMatrix<f64>,
    x: DMatrix<f64>,
    z: DMatrix<f64>,
}

impl DatasetBlock {
    /// `z` may have zero columns.
    pub fn new(y: DMatrix<f64>, x: DMatrix<f64>, z: DMatrix<f64>) -> Result<Self> {
        let n = y.nrows();
        if n == 0 {
            return Err(Error::Dimension("a dataset needs at least one row".into()));
        }
        if y.ncols() == 0 {
            return Err(Error::Dimension("Y must have at least one column".into()));
        }
        if x.nrows() != n || z.nrows() != n {
            return Err(Error::Dimension(format!(
                "row counts differ: Y has {n}, X has {}, Z has {}",
                x.nrows(),
                z.nrows()
            )));
        }
        for (name, mat) in [("Y", &y), ("X", &x), ("Z", &z)] {
            if mat.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(name.into()));
            }
        }
        Ok(Self { y, x, z })
    }

    /// Block without dataset-specific covariates.
    pub fn without_specific(y: DMatrix<f64>, x: DMatrix<f64>) -> Result<Self> {
        let n = y.nrows();
        Self::new(y, x, DMatrix::zeros(n, 0))
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn z(&self) -> &DMatrix<f64> {
        &self.z
    }

    pub fn n(&self) -> usize {
        self.y.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn q(&self) -> usize {
        self.y.ncols()
    }

    pub fn r(&self) -> usize {
        self.z.ncols()
    }

    /// Block restricted to the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if rows.iter().any(|&i| i >= self.n()) {
            return Err(Error::InvalidArgument("row index out of range".into()));
        }
        Self::new(
            self.y.select_rows(rows),
            self.x.select_rows(rows),
            self.z.select_rows(rows),
        )
    }

    /// Block with only response column `k`.
    pub fn response(&self, k: usize) -> Result<Self> {
        if k >= self.q() {
            return Err(Error::InvalidArgument(format!("response {k} out of range")));
        }
        Self::new(self.y.columns(k, 1).into_owned(), self.x.clone(), self.z.clone())
    }

    pub fn into_parts(self) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        (self.y, self.x, self.z)
    }
}

/// The `M` aligned datasets. Every block shares `p` and `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegratedDataset {
    blocks: Vec<DatasetBlock>,
    p: usize,
    q: usize,
}

impl IntegratedDataset {
    pub fn new(blocks: Vec<DatasetBlock>) -> Result<Self> {
        let first = blocks
            .first()
            .ok_or_else(|| Error::Dimension("at least one dataset is required".into()))?;
        let (p, q) = (first.p(), first.q());
        for (m, b) in blocks.iter().enumerate() {
            if b.p() != p || b.q() != q {
                return Err(Error::Dimension(format!(
                    "dataset {m} has p={}, q={}; dataset 0 has p={p}, q={q}",
                    b.p(),
                    b.q()
                )));
            }
        }
        Ok(Self { blocks, p, q })
    }

    pub fn blocks(&self) -> &[DatasetBlock] {
        &self.blocks
    }

    pub fn block(&self, m: usize) -> &DatasetBlock {
        &self.blocks[m]
    }

    /// Number of datasets `M`.
    pub fn m(&self) -> usize {
        self.blocks.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn r(&self) -> Vec<usize> {
        self.blocks.iter().map(DatasetBlock::r).collect()
    }

    pub fn n(&self) -> Vec<usize> {
        self.blocks.iter().map(DatasetBlock::n).collect()
    }

    /// Same datasets with a single response column.
    pub fn response(&self, k: usize) -> Result<Self> {
        Self::new(
            self.blocks
                .iter()
                .map(|b| b.response(k))
                .collect::<Result<_>>()?,
        )
    }

    /// Datasets reordered so that new block `i` is old block `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.m()];
        for &i in order {
            if i >= self.m() || std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidArgument("order is not a permutation".into()));
            }
        }
        if order.len() != self.m() {
            return Err(Error::InvalidArgument("order is not a permutation".into()));
        }
        Self::new(order.iter().map(|&i| self.blocks[i].clone()).collect())
    }
}

/// Regularization weights and the ADMM penalty parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    /// Group-lasso weight on shared-covariate coefficients.
    pub lambda: f64,
    /// Lasso weight on dataset-specific coefficients.
    pub gamma: f64,
    /// ADMM penalty parameter.
    #[serde(default = "default_rho")]
    pub rho: f64,
}

fn default_rho() -> f64 {
    1.0
}

impl HyperParams {
    pub fn new(lambda: f64, gamma: f64) -> Result<Self> {
        Self::with_rho(lambda, gamma, 1.0)
    }

    pub fn with_rho(lambda: f64, gamma: f64, rho: f64) -> Result<Self> {
        let hp = Self { lambda, gamma, rho };
        hp.validate()?;
        Ok(hp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::InvalidArgument(format!("rho must be > 0, got {}", self.rho)));
        }
        Ok(())
    }
}

/// Estimated intercepts and coefficients for every dataset.
///
/// `support_b` marks entries `(j, k)` that are nonzero in at least one
/// dataset. For fits produced by the ADMM solver the zero pattern is shared by
/// all datasets, so this is the common indicator; per-dataset baselines may
/// break that, which [`ModelFit::is_homogeneous`] reports.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFit {
    alpha: Vec<DVector<f64>>,
    b: Vec<DMatrix<f64>>,
    c: Vec<DMatrix<f64>>,
    support_b: DMatrix<bool>,
    support_c: Vec<DMatrix<bool>>,
}

impl ModelFit {
    pub fn new(alpha: Vec<DVector<f64>>, b: Vec<DMatrix<f64>>, c: Vec<DMatrix<f64>>) -> Result<Self> {
        let m = alpha.len();
        if m == 0 || b.len() != m || c.len() != m {
            return Err(Error::Dimension(format!(
                "fit has {} intercept vectors, {} B and {} C matrices",
                alpha.len(),
                b.len(),
                c.len()
            )));
        }
        let (p, q) = b[0].shape();
        for i in 0..m {
            if alpha[i].len() != q || b[i].shape() != (p, q) || c[i].ncols() != q {
                return Err(Error::Dimension(format!("fit block {i} has inconsistent shapes")));
            }
        }
        let support_b = DMatrix::from_fn(p, q, |j, k| b.iter().any(|bm| bm[(j, k)] != 0.0));
        let support_c = c.iter().map(|cm| cm.map(|v| v != 0.0)).collect();
        Ok(Self {
            alpha,
            b,
            c,
            support_b,
            support_c,
        })
    }

    /// All-zero fit shaped for `data`.
    pub fn zeros(data: &IntegratedDataset) -> Self {
        let (p, q) = (data.p(), data.q());
        Self::new(
            vec![DVector::zeros(q); data.m()],
            vec![DMatrix::zeros(p, q); data.m()],
            data.blocks().iter().map(|b| DMatrix::zeros(b.r(), q)).collect(),
        )
        .expect("zero fit is consistent by construction")
    }

    pub fn alpha(&self) -> &[DVector<f64>] {
        &self.alpha
    }

    pub fn b(&self) -> &[DMatrix<f64>] {
        &self.b
    }

    pub fn c(&self) -> &[DMatrix<f64>] {
        &self.c
    }

    pub fn support_b(&self) -> &DMatrix<bool> {
        &self.support_b
    }

    pub fn support_c(&self) -> &[DMatrix<bool>] {
        &self.support_c
    }

    pub fn m(&self) -> usize {
        self.alpha.len()
    }

    /// Zero pattern of `B^m` for one dataset.
    pub fn support_b_of(&self, m: usize) -> DMatrix<bool> {
        self.b[m].map(|v| v != 0.0)
    }

    /// True when every `B^m` has the same zero pattern.
    pub fn is_homogeneous(&self) -> bool {
        (0..self.m()).all(|m| self.support_b_of(m) == self.support_b)
    }

    pub fn nonzero_groups(&self) -> usize {
        self.support_b.iter().filter(|&&s| s).count()
    }

    /// Fitted values `1αᵀ + XB + ZC` for dataset `m` on new covariate rows.
    pub fn predict(&self, m: usize, x: &DMatrix<f64>, z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.b[m].nrows() || z.ncols() != self.c[m].nrows() || x.nrows() != z.nrows() {
            return Err(Error::Dimension(format!("prediction inputs do not match fit block {m}")));
        }
        let mut out = x * &self.b[m] + z * &self.c[m];
        for mut row in out.row_iter_mut() {
            row += self.alpha[m].transpose();
        }
        Ok(out)
    }

    pub fn into_parts(self) -> (Vec<DVector<f64>>, Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
        (self.alpha, self.b, self.c)
    }

    pub(crate) fn check_against(&self, data: &IntegratedDataset) -> Result<()> {
        if self.m() != data.m() {
            return Err(Error::Dimension(format!(
                "fit has {} datasets, data has {}",
                self.m(),
                data.m()
            )));
        }
        for (m, block) in data.blocks().iter().enumerate() {
            if self.alpha[m].len() != data.q()
                || self.b[m].shape() != (data.p(), data.q())
                || self.c[m].shape() != (block.r(), data.q())
            {
                return Err(Error::Dimension(format!("fit block {m} does not match dataset {m}")));
            }
        }
        Ok(())
    }
}

/// `Y − 1αᵀ − XB − ZC` for one dataset.
pub fn residual_matrix(
    block: &DatasetBlock,
    alpha: &DVector<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let q = block.q();
    if alpha.len() != q || b.shape() != (block.p(), q) || c.shape() != (block.r(), q) {
        return Err(Error::Dimension(format!(
            "block is n={} p={} r={} q={q}; got alpha {}, B {:?}, C {:?}",
            block.n(),
            block.p(),
            block.r(),
            alpha.len(),
            b.shape(),
            c.shape()
        )));
    }
    Ok(residual_unchecked(block, alpha, b, c))
}

pub(crate) fn residual_unchecked(
    block: &DatasetBlock,
    alpha: &DVector<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
) -> DMatrix<f64> {
    let mut r = block.y().clone();
    r.gemm(-1.0, block.x(), b, 1.0);
    if block.r() > 0 {
        r.gemm(-1.0, block.z(), c, 1.0);
    }
    for mut row in r.row_iter_mut() {
        row -= alpha.transpose();
    }
    r
}

/// Squared-error part of the objective: `Σ_m ‖R^m‖²_F / (2 n_m)`.
pub fn loss(data: &IntegratedDataset, fit: &ModelFit) -> Result<f64> {
    fit.check_against(data)?;
    Ok(loss_parts(data, fit.alpha(), fit.b(), fit.c()))
}

pub(crate) fn loss_parts(
    data: &IntegratedDataset,
    alpha: &[DVector<f64>],
    b: &[DMatrix<f64>],
    c: &[DMatrix<f64>],
) -> f64 {
    data.blocks()
        .iter()
        .enumerate()
        .map(|(m, block)| {
            let r = residual_unchecked(block, &alpha[m], &b[m], &c[m]);
            r.norm_squared() / (2.0 * block.n() as f64)
        })
        .sum()
}

/// `Σ_{j,k} ‖(B^1_jk, …, B^M_jk)‖₂`.
pub fn group_norm_sum(b: &[DMatrix<f64>]) -> f64 {
    let Some(first) = b.first() else { return 0.0 };
    let (p, q) = first.shape();
    let mut total = 0.0;
    for k in 0..q {
        for j in 0..p {
            total += b.iter().map(|bm| bm[(j, k)].powi(2)).sum::<f64>().sqrt();
        }
    }
    total
}

/// `Σ_m ‖C^m‖₁` (entrywise).
pub fn l1_sum(c: &[DMatrix<f64>]) -> f64 {
    c.iter().map(|cm| cm.iter().map(|v| v.abs()).sum::<f64>()).sum()
}

/// Penalized objective at `fit`.
pub fn objective(data: &IntegratedDataset, fit: &ModelFit, hp: &HyperParams) -> Result<f64> {
    hp.validate()?;
    fit.check_against(data)?;
    Ok(objective_parts(data, fit.alpha(), fit.b(), fit.c(), hp))
}

pub(crate) fn objective_parts(
    data: &IntegratedDataset,
    alpha: &[DVector<f64>],
    b: &[DMatrix<f64>],
    c: &[DMatrix<f64>],
    hp: &HyperParams,
) -> f64 {
    loss_parts(data, alpha, b, c) + hp.lambda * group_norm_sum(b) + hp.gamma * l1_sum(c)
}
