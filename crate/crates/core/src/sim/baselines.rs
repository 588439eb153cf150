//! The comparison methods, all expressed as reductions of the main solver.
//!
//! - MR: the integrative estimator on all datasets and responses at once.
//! - UR: the integrative estimator run separately per response.
//! - mlasso: one dataset at a time, every covariate (shared and specific)
//!   under an entrywise lasso, all responses together.
//! - lasso: mlasso on one response at a time.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::admm::SolverOptions;
use crate::error::{Error, Result};
use crate::model::{DatasetBlock, IntegratedDataset, ModelFit};
use crate::selection::{self, CvResult, GridSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tuning {
    pub k: usize,
    pub grid: GridSpec,
    pub solver: SolverOptions,
}

impl Default for Tuning {
    fn default() -> Self {
        Self {
            k: selection::DEFAULT_FOLDS,
            grid: GridSpec::default(),
            solver: SolverOptions::sweep(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "MR")]
    Mr,
    #[serde(rename = "UR")]
    Ur,
    #[serde(rename = "lasso")]
    Lasso,
    #[serde(rename = "mlasso")]
    Mlasso,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Mr, Method::Ur, Method::Lasso, Method::Mlasso];

    pub fn label(self) -> &'static str {
        match self {
            Method::Mr => "MR",
            Method::Ur => "UR",
            Method::Lasso => "lasso",
            Method::Mlasso => "mlasso",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mr" => Ok(Method::Mr),
            "ur" => Ok(Method::Ur),
            "lasso" => Ok(Method::Lasso),
            "mlasso" => Ok(Method::Mlasso),
            "mglasso" => Err(Error::InvalidArgument(
                "mglasso relies on external software and is not available".into(),
            )),
            other => Err(Error::InvalidArgument(format!("unknown method {other:?}"))),
        }
    }
}

fn tune(data: &IntegratedDataset, tuning: &Tuning, seed: u64) -> Result<CvResult> {
    let grid = tuning.grid.resolve(data)?;
    selection::select(data, &grid, tuning.k, seed, &tuning.solver)
}

/// One cross-validated fit per response, each on the `q = 1` slice.
pub fn fit_ur(data: &IntegratedDataset, tuning: &Tuning, seed: u64) -> Result<Vec<CvResult>> {
    (0..data.q()).map(|k| tune(&data.response(k)?, tuning, seed)).collect()
}

/// Stitch per-response fits back into a `q`-response fit.
pub fn combine_responses(fits: &[&ModelFit]) -> Result<ModelFit> {
    let first = fits.first().ok_or_else(|| Error::InvalidArgument("no fits to combine".into()))?;
    let m = first.m();
    let cols = |get: &dyn Fn(&ModelFit) -> DMatrix<f64>| -> Result<DMatrix<f64>> {
        let parts: Vec<DMatrix<f64>> = fits.iter().map(|f| get(f)).collect();
        let rows = parts[0].nrows();
        if parts.iter().any(|p| p.nrows() != rows) {
            return Err(Error::Dimension("per-response fits disagree on shape".into()));
        }
        let q: usize = parts.iter().map(|p| p.ncols()).sum();
        let mut out = DMatrix::zeros(rows, q);
        let mut at = 0;
        for p in &parts {
            out.columns_mut(at, p.ncols()).copy_from(p);
            at += p.ncols();
        }
        Ok(out)
    };
    let mut alpha = Vec::with_capacity(m);
    let mut b = Vec::with_capacity(m);
    let mut c = Vec::with_capacity(m);
    for i in 0..m {
        if fits.iter().any(|f| f.m() != m) {
            return Err(Error::Dimension("per-response fits disagree on dataset count".into()));
        }
        let a = cols(&|f| DMatrix::from_column_slice(1, f.alpha()[i].len(), f.alpha()[i].as_slice()))?;
        alpha.push(DVector::from_row_slice(a.as_slice()));
        b.push(cols(&|f| f.b()[i].clone())?);
        c.push(cols(&|f| f.c()[i].clone())?);
    }
    ModelFit::new(alpha, b, c)
}

/// Single dataset with `[X Z]` as one lasso-penalized design (the shared
/// block is left empty, so only the γ path is active).
pub fn lasso_design(block: &DatasetBlock) -> Result<IntegratedDataset> {
    let n = block.n();
    let w = DMatrix::from_fn(n, block.p() + block.r(), |i, j| {
        if j < block.p() {
            block.x()[(i, j)]
        } else {
            block.z()[(i, j - block.p())]
        }
    });
    IntegratedDataset::new(vec![DatasetBlock::new(block.y().clone(), DMatrix::zeros(n, 0), w)?])
}

/// Cross-validated entrywise lasso on one dataset, all responses jointly.
pub fn fit_mlasso(block: &DatasetBlock, tuning: &Tuning, seed: u64) -> Result<CvResult> {
    tune(&lasso_design(block)?, tuning, seed)
}

/// Split a [`lasso_design`] fit back into `(α, B, C)` for a dataset with `p`
/// shared covariates.
pub fn split_lasso_fit(fit: &ModelFit, p: usize) -> (DVector<f64>, DMatrix<f64>, DMatrix<f64>) {
    let w = &fit.c()[0];
    let r = w.nrows() - p;
    (fit.alpha()[0].clone(), w.rows(0, p).into_owned(), w.rows(p, r).into_owned())
}

fn per_dataset(
    data: &IntegratedDataset,
    mut fit_one: impl FnMut(&DatasetBlock) -> Result<(DVector<f64>, DMatrix<f64>, DMatrix<f64>)>,
) -> Result<ModelFit> {
    let mut alpha = Vec::new();
    let mut b = Vec::new();
    let mut c = Vec::new();
    for blk in data.blocks() {
        let (a, bm, cm) = fit_one(blk)?;
        alpha.push(a);
        b.push(bm);
        c.push(cm);
    }
    ModelFit::new(alpha, b, c)
}

/// Fit `method` and return its coefficients shaped like an integrative fit.
pub fn fit_method(method: Method, data: &IntegratedDataset, tuning: &Tuning, seed: u64) -> Result<ModelFit> {
    let p = data.p();
    match method {
        Method::Mr => Ok(tune(data, tuning, seed)?.refit.fit),
        Method::Ur => {
            let per = fit_ur(data, tuning, seed)?;
            combine_responses(&per.iter().map(|r| &r.refit.fit).collect::<Vec<_>>())
        }
        Method::Mlasso => per_dataset(data, |blk| Ok(split_lasso_fit(&fit_mlasso(blk, tuning, seed)?.refit.fit, p))),
        Method::Lasso => per_dataset(data, |blk| {
            let single = IntegratedDataset::new(vec![blk.clone()])?;
            let fits = (0..blk.q())
                .map(|k| {
                    let slice = single.response(k)?;
                    let res = fit_mlasso(slice.block(0), tuning, seed)?;
                    let (a, bm, cm) = split_lasso_fit(&res.refit.fit, p);
                    ModelFit::new(vec![a], vec![bm], vec![cm])
                })
                .collect::<Result<Vec<_>>>()?;
            let joined = combine_responses(&fits.iter().collect::<Vec<_>>())?;
            let (a, bm, cm) = joined.into_parts();
            Ok((a[0].clone(), bm[0].clone(), cm[0].clone()))
        }),
    }
}
