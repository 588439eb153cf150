//! K-fold cross-validation over a `(λ, γ)` grid.
//!
//! The score of a grid cell is
//!
//! ```text
//! CV = 1/K Σ_k Σ_m 1/(2 n_m^(k)) ‖Y^m_(k) − 1 α̂ᵀ − X^m_(k) B̂ − Z^m_(k) Ĉ‖²_F
//! ```
//!
//! with the hatted estimates fit on everything outside fold `k` (penalties are
//! not part of the score). Within a γ column the λ values are swept from
//! largest to smallest and each fold's fit is warm-started from the previous
//! λ. Columns and folds run in parallel; the result does not depend on the
//! number of worker threads.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::admm::{self, AdmmState, FitReport, SolverOptions};
use crate::error::{Error, Result};
use crate::model::{self, HyperParams, IntegratedDataset, ModelFit};

pub const DEFAULT_FOLDS: usize = 5;

/// Fold label (0-based) for every row of every dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    labels: Vec<Vec<usize>>,
    k: usize,
    seed: u64,
}

impl FoldAssignment {
    /// Wrap explicit labels. Every fold must be nonempty in every dataset.
    pub fn from_labels(labels: Vec<Vec<usize>>, k: usize, seed: u64) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidArgument(format!("K must be >= 2, got {k}")));
        }
        for (m, l) in labels.iter().enumerate() {
            let mut counts = vec![0usize; k];
            for &f in l {
                *counts
                    .get_mut(f)
                    .ok_or_else(|| Error::InvalidArgument(format!("dataset {m}: fold label {f} >= K={k}")))? += 1;
            }
            if counts.contains(&0) {
                return Err(Error::InvalidArgument(format!("dataset {m}: some fold is empty")));
            }
        }
        Ok(Self { labels, k, seed })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn labels(&self, m: usize) -> &[usize] {
        &self.labels[m]
    }

    pub fn fold_sizes(&self, m: usize) -> Vec<usize> {
        let mut counts = vec![0; self.k];
        for &f in &self.labels[m] {
            counts[f] += 1;
        }
        counts
    }

    fn rows(&self, m: usize, fold: usize, inside: bool) -> Vec<usize> {
        self.labels[m]
            .iter()
            .enumerate()
            .filter(|(_, &f)| (f == fold) == inside)
            .map(|(i, _)| i)
            .collect()
    }

    /// Same partition with fold `f` renamed to `perm[f]`.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        let labels = self
            .labels
            .iter()
            .map(|l| l.iter().map(|&f| perm[f]).collect())
            .collect();
        Self::from_labels(labels, self.k, self.seed)
    }

    fn check_against(&self, data: &IntegratedDataset) -> Result<()> {
        if self.labels.len() != data.m() {
            return Err(Error::Dimension("fold assignment does not cover every dataset".into()));
        }
        for (m, blk) in data.blocks().iter().enumerate() {
            if self.labels[m].len() != blk.n() {
                return Err(Error::Dimension(format!("dataset {m}: fold labels do not match row count")));
            }
        }
        Ok(())
    }
}

/// Balanced random folds, drawn independently within each dataset.
pub fn make_folds(data: &IntegratedDataset, k: usize, seed: u64) -> Result<FoldAssignment> {
    let min_n = data.n().into_iter().min().unwrap_or(0);
    if k < 2 || k > min_n {
        return Err(Error::InvalidArgument(format!(
            "K must satisfy 2 <= K <= min n_m = {min_n}, got {k}"
        )));
    }
    let labels = data
        .blocks()
        .iter()
        .enumerate()
        .map(|(m, blk)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(m as u64);
            let mut order: Vec<usize> = (0..blk.n()).collect();
            order.shuffle(&mut rng);
            let mut labels = vec![0; blk.n()];
            for (pos, &row) in order.iter().enumerate() {
                labels[row] = pos % k;
            }
            labels
        })
        .collect();
    FoldAssignment::from_labels(labels, k, seed)
}

/// Descending, deduplicated, strictly positive `λ` and `γ` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvGrid {
    lambdas: Vec<f64>,
    gammas: Vec<f64>,
}

fn normalize_axis(name: &str, mut v: Vec<f64>) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::InvalidArgument(format!("{name} grid is empty")));
    }
    if let Some(bad) = v.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
        return Err(Error::InvalidArgument(format!("{name} grid value {bad} is not positive")));
    }
    v.sort_by(|a, b| b.total_cmp(a));
    v.dedup();
    Ok(v)
}

impl CvGrid {
    pub fn new(lambdas: Vec<f64>, gammas: Vec<f64>) -> Result<Self> {
        Ok(Self {
            lambdas: normalize_axis("lambda", lambdas)?,
            gammas: normalize_axis("gamma", gammas)?,
        })
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    /// Data-driven grid: `n_lambda` values log-spaced from `λ_ref` down to
    /// `λ_ref·ratio`, where `λ_ref` is the largest group norm of the shared
    /// covariate loss gradient at the intercept-only fit (the smallest `λ`
    /// that zeroes every group). `γ` likewise with the largest entry of the
    /// specific-covariate gradient. An axis with no covariates gets the
    /// single value 1.
    pub fn data_driven(data: &IntegratedDataset, n_lambda: usize, n_gamma: usize, ratio: f64) -> Result<Self> {
        if n_lambda == 0 || n_gamma == 0 || !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidArgument("grid needs >= 1 value per axis and 0 < ratio < 1".into()));
        }
        let (lambda_ref, gamma_ref) = penalty_bounds(data);
        Self::new(log_path(lambda_ref, n_lambda, ratio), log_path(gamma_ref, n_gamma, ratio))
    }

    pub fn default_for(data: &IntegratedDataset) -> Result<Self> {
        Self::data_driven(data, 15, 15, 1e-3)
    }
}

/// How to build the `(λ, γ)` grid for a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridSpec {
    /// [`CvGrid::data_driven`] with these sizes.
    Auto { n_lambda: usize, n_gamma: usize, ratio: f64 },
    Explicit(CvGrid),
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::Auto {
            n_lambda: 15,
            n_gamma: 15,
            ratio: 1e-3,
        }
    }
}

impl GridSpec {
    pub fn resolve(&self, data: &IntegratedDataset) -> Result<CvGrid> {
        match self {
            Self::Auto { n_lambda, n_gamma, ratio } => CvGrid::data_driven(data, *n_lambda, *n_gamma, *ratio),
            Self::Explicit(g) => Ok(g.clone()),
        }
    }
}

impl std::str::FromStr for GridSpec {
    type Err = Error;

    /// `auto`, `auto:15x15`, `auto:15x15:1e-3`, or
    /// `lambda=1,0.1,0.01;gamma=0.5,0.05`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::InvalidArgument(format!("grid spec {s:?}: {why}"));
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("auto") {
            let Self::Auto { mut n_lambda, mut n_gamma, mut ratio } = Self::default() else { unreachable!() };
            let parts: Vec<&str> = rest.split(':').skip(1).collect();
            if !rest.is_empty() && parts.is_empty() {
                return Err(bad("expected auto[:NLxNG[:ratio]]"));
            }
            if let Some(size) = parts.first() {
                let (a, b) = size.split_once('x').ok_or_else(|| bad("size must look like 15x15"))?;
                n_lambda = a.parse().map_err(|_| bad("bad lambda count"))?;
                n_gamma = b.parse().map_err(|_| bad("bad gamma count"))?;
            }
            if let Some(r) = parts.get(1) {
                ratio = r.parse().map_err(|_| bad("bad ratio"))?;
            }
            if parts.len() > 2 || n_lambda == 0 || n_gamma == 0 || !(ratio > 0.0 && ratio < 1.0) {
                return Err(bad("need positive counts and 0 < ratio < 1"));
            }
            return Ok(Self::Auto { n_lambda, n_gamma, ratio });
        }
        let mut lambdas = None;
        let mut gammas = None;
        for part in s.split(';') {
            let (key, vals) = part.split_once('=').ok_or_else(|| bad("expected key=v1,v2,..."))?;
            let vals = vals
                .split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| bad("non-numeric value")))
                .collect::<Result<Vec<_>>>()?;
            match key.trim() {
                "lambda" => lambdas = Some(vals),
                "gamma" => gammas = Some(vals),
                other => return Err(bad(&format!("unknown key {other:?}"))),
            }
        }
        match (lambdas, gammas) {
            (Some(l), Some(g)) => Ok(Self::Explicit(CvGrid::new(l, g)?)),
            _ => Err(bad("both lambda= and gamma= are required")),
        }
    }
}

fn log_path(top: f64, n: usize, ratio: f64) -> Vec<f64> {
    if !(top > 0.0) {
        return vec![1.0];
    }
    if n == 1 {
        return vec![top];
    }
    (0..n)
        .map(|i| top * ratio.powf(i as f64 / (n - 1) as f64))
        .collect()
}

/// `(λ_ref, γ_ref)`: the smallest penalties for which the intercept-only fit
/// is optimal.
pub fn penalty_bounds(data: &IntegratedDataset) -> (f64, f64) {
    let grads = admm::loss_gradients(data, &intercept_only(data)).expect("intercept-only fit matches data");
    let mut lambda_ref: f64 = 0.0;
    for j in 0..data.p() {
        for k in 0..data.q() {
            let norm = grads.iter().map(|g| g.1[(j, k)].powi(2)).sum::<f64>().sqrt();
            lambda_ref = lambda_ref.max(norm);
        }
    }
    let gamma_ref = grads.iter().map(|g| g.2.amax()).fold(0.0, f64::max);
    (lambda_ref, gamma_ref)
}

fn intercept_only(data: &IntegratedDataset) -> ModelFit {
    let (_, b, c) = ModelFit::zeros(data).into_parts();
    let alpha = data
        .blocks()
        .iter()
        .map(|blk| nalgebra::DVector::from_iterator(blk.q(), blk.y().column_iter().map(|col| col.mean())))
        .collect();
    ModelFit::new(alpha, b, c).expect("shapes match")
}

#[derive(Debug, Clone)]
pub struct CvResult {
    pub lambdas: Vec<f64>,
    pub gammas: Vec<f64>,
    /// `cv_matrix[(i, j)]` is the score at `(lambdas[i], gammas[j])`.
    pub cv_matrix: DMatrix<f64>,
    pub best_lambda: f64,
    pub best_gamma: f64,
    /// Fit on the full data at the selected pair.
    pub refit: FitReport,
}

struct Split {
    train: IntegratedDataset,
    test: IntegratedDataset,
}

fn splits(data: &IntegratedDataset, folds: &FoldAssignment) -> Result<Vec<Split>> {
    folds.check_against(data)?;
    (0..folds.k())
        .map(|f| {
            let mut train = Vec::with_capacity(data.m());
            let mut test = Vec::with_capacity(data.m());
            for (m, blk) in data.blocks().iter().enumerate() {
                let tr = folds.rows(m, f, false);
                if tr.is_empty() {
                    return Err(Error::InvalidArgument(format!("dataset {m}: fold {f} leaves no training rows")));
                }
                let te = folds.rows(m, f, true);
                if te.is_empty() {
                    return Err(Error::InvalidArgument(format!("dataset {m}: fold {f} is empty")));
                }
                train.push(blk.select_rows(&tr)?);
                test.push(blk.select_rows(&te)?);
            }
            Ok(Split {
                train: IntegratedDataset::new(train)?,
                test: IntegratedDataset::new(test)?,
            })
        })
        .collect()
}

/// Held-out loss `Σ_m ‖R^m‖²_F / (2 n_m)` of `fit` on `test`.
fn held_out_loss(test: &IntegratedDataset, fit: &ModelFit) -> f64 {
    model::loss(test, fit).expect("train and test splits share shapes")
}

/// Cross-validation score of one `(λ, γ)` pair (cold starts).
pub fn cv_score(data: &IntegratedDataset, folds: &FoldAssignment, hp: &HyperParams, opts: &SolverOptions) -> Result<f64> {
    let splits = splits(data, folds)?;
    let losses = splits
        .par_iter()
        .map(|s| admm::fit(&s.train, hp, opts, None).map(|rep| held_out_loss(&s.test, &rep.fit)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(losses.iter().sum::<f64>() / folds.k() as f64)
}

/// Evaluate the grid with fresh folds, then refit at the minimizer.
pub fn select(
    data: &IntegratedDataset,
    grid: &CvGrid,
    k: usize,
    seed: u64,
    opts: &SolverOptions,
) -> Result<CvResult> {
    let folds = make_folds(data, k, seed)?;
    select_with_folds(data, grid, &folds, opts, true)
}

/// Grid search on a given fold assignment. With `warm_start` off every fit
/// starts from zero.
pub fn select_with_folds(
    data: &IntegratedDataset,
    grid: &CvGrid,
    folds: &FoldAssignment,
    opts: &SolverOptions,
    warm_start: bool,
) -> Result<CvResult> {
    let rho = 1.0;
    let splits = splits(data, folds)?;
    let (nl, ng) = (grid.lambdas.len(), grid.gammas.len());

    // One warm-start chain per (γ, fold); each returns the held-out loss at every λ.
    let jobs: Vec<(usize, usize)> = (0..ng).flat_map(|g| (0..folds.k()).map(move |f| (g, f))).collect();
    let chains = jobs
        .par_iter()
        .map(|&(g, f)| -> Result<Vec<f64>> {
            let split = &splits[f];
            let mut state: Option<AdmmState> = None;
            let mut losses = Vec::with_capacity(nl);
            for &lambda in &grid.lambdas {
                let hp = HyperParams::with_rho(lambda, grid.gammas[g], rho)?;
                let init = if warm_start { state.as_ref() } else { None };
                let rep = admm::fit(&split.train, &hp, opts, init)?;
                losses.push(held_out_loss(&split.test, &rep.fit));
                state = Some(rep.state);
            }
            Ok(losses)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut cv_matrix = DMatrix::zeros(nl, ng);
    for (idx, &(g, _)) in jobs.iter().enumerate() {
        for (l, loss) in chains[idx].iter().enumerate() {
            cv_matrix[(l, g)] += loss;
        }
    }
    cv_matrix /= folds.k() as f64;

    let (bl, bg) = argmin_parsimonious(&cv_matrix);
    let (best_lambda, best_gamma) = (grid.lambdas[bl], grid.gammas[bg]);
    let refit = admm::fit(data, &HyperParams::with_rho(best_lambda, best_gamma, rho)?, opts, None)?;
    Ok(CvResult {
        lambdas: grid.lambdas.clone(),
        gammas: grid.gammas.clone(),
        cv_matrix,
        best_lambda,
        best_gamma,
        refit,
    })
}

/// Minimizer of a score matrix whose rows run over descending λ and columns
/// over descending γ. Cells within 1e-12 of the minimum tie; the tie goes to
/// the largest λ, then the largest γ.
fn argmin_parsimonious(scores: &DMatrix<f64>) -> (usize, usize) {
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    for l in 0..scores.nrows() {
        for g in 0..scores.ncols() {
            if scores[(l, g)] <= min + 1e-12 {
                return (l, g);
            }
        }
    }
    (0, 0)
}
