//! Monte Carlo study driver.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelFit;

use super::baselines::{fit_method, Method, Tuning};
use super::config::SimConfig;
use super::generate::{generate, SimData};
use super::metrics::{fpr_fnr, mse, stack, stack_for, MetricMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyOptions {
    pub tuning: Tuning,
    pub mode: MetricMode,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self { tuning: Tuning::default(), mode: MetricMode::Paper }
    }
}

/// Metrics of one method on one replicate. `mse`, `fpr_by_dataset` and
/// `fnr_by_dataset` are indexed by dataset; `fpr`/`fnr` use the full stacked
/// coefficient vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateMetrics {
    pub scenario: String,
    pub method: Method,
    pub replicate: usize,
    pub mse: Vec<Vec<f64>>,
    pub fpr: f64,
    pub fnr: f64,
    pub fpr_by_dataset: Vec<f64>,
    pub fnr_by_dataset: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub scenario: String,
    pub method: Method,
    pub replicate: usize,
    pub kind: String,
    pub message: String,
}

/// One row of the boxplot-data table. Datasets and responses are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotRow {
    pub scenario: String,
    pub method: String,
    pub dataset: usize,
    pub response: usize,
    pub replicate: usize,
    pub mse: f64,
    pub fpr: f64,
    pub fnr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

/// Summary of one (scenario, method, dataset, response) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub scenario: String,
    pub method: Method,
    pub dataset: usize,
    pub response: usize,
    pub replicates: usize,
    pub mse: Quartiles,
    pub fpr: Quartiles,
    pub fnr: Quartiles,
    pub fpr_mean: f64,
    pub fnr_mean: f64,
}

/// Summary of one (scenario, method) pair over the stacked coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub scenario: String,
    pub method: Method,
    pub replicates: usize,
    pub failures: usize,
    pub fpr_mean: f64,
    pub fnr_mean: f64,
    pub fpr: Quartiles,
    pub fnr: Quartiles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyMetrics {
    pub mode: MetricMode,
    pub records: Vec<ReplicateMetrics>,
    pub failures: Vec<Failure>,
    pub cells: Vec<CellSummary>,
    pub methods: Vec<MethodSummary>,
    /// Methods from the original comparison that are not implemented.
    pub absent_methods: Vec<String>,
}

/// Linearly interpolated sample quantile (`q` in `[0, 1]`).
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

fn quartiles(values: &[f64]) -> Quartiles {
    Quartiles { q1: quantile(values, 0.25), median: median(values), q3: quantile(values, 0.75) }
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        f64::NAN
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// Metrics of an already-fitted model against a simulated replicate.
pub fn evaluate(
    scenario: &str,
    method: Method,
    replicate: usize,
    fit: &ModelFit,
    sim: &SimData,
    mode: MetricMode,
) -> Result<ReplicateMetrics> {
    let mse = mse(fit, &sim.test)?;
    let (fpr, fnr) = fpr_fnr(&stack(fit), &sim.truth.stacked(), mode)?;
    let (fpr_by_dataset, fnr_by_dataset) = (0..fit.m())
        .map(|m| fpr_fnr(&stack_for(fit, m), &sim.truth.stacked_for(m), mode))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    Ok(ReplicateMetrics {
        scenario: scenario.to_string(),
        method,
        replicate,
        mse,
        fpr,
        fnr,
        fpr_by_dataset,
        fnr_by_dataset,
    })
}

fn run_replicate(
    cfg: &SimConfig,
    methods: &[Method],
    replicate: usize,
    options: &StudyOptions,
) -> Vec<std::result::Result<ReplicateMetrics, Failure>> {
    let name = cfg.name();
    let failure = |method: Method, e: &Error| Failure {
        scenario: name.clone(),
        method,
        replicate,
        kind: e.kind().to_string(),
        message: e.to_string(),
    };
    let sim = match generate(cfg, replicate) {
        Ok(sim) => sim,
        Err(e) => return methods.iter().map(|&m| Err(failure(m, &e))).collect(),
    };
    let seed = cfg.seed.wrapping_add(replicate as u64);
    methods
        .iter()
        .map(|&method| {
            fit_method(method, &sim.train, &options.tuning, seed)
                .and_then(|fit| evaluate(&name, method, replicate, &fit, &sim, options.mode))
                .map_err(|e| failure(method, &e))
        })
        .collect()
}

/// Run every method on every replicate of every scenario. Failed
/// (replicate, method) pairs are recorded and skipped.
pub fn run_study(configs: &[SimConfig], methods: &[Method], options: &StudyOptions) -> Result<StudyMetrics> {
    if methods.is_empty() {
        return Err(Error::InvalidArgument("no methods requested".into()));
    }
    for cfg in configs {
        cfg.validate()?;
    }
    options.tuning.solver.validate()?;

    let jobs: Vec<(usize, usize)> = configs
        .iter()
        .enumerate()
        .flat_map(|(i, cfg)| (0..cfg.replicates).map(move |r| (i, r)))
        .collect();
    let outcomes: Vec<_> = jobs
        .par_iter()
        .map(|&(i, r)| run_replicate(&configs[i], methods, r, options))
        .collect();

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes.into_iter().flatten() {
        match outcome {
            Ok(rec) => records.push(rec),
            Err(f) => failures.push(f),
        }
    }

    let mut cells = Vec::new();
    let mut summaries = Vec::new();
    for cfg in configs {
        let name = cfg.name();
        for &method in methods {
            let recs: Vec<&ReplicateMetrics> =
                records.iter().filter(|r| r.scenario == name && r.method == method).collect();
            let fprs: Vec<f64> = recs.iter().map(|r| r.fpr).collect();
            let fnrs: Vec<f64> = recs.iter().map(|r| r.fnr).collect();
            summaries.push(MethodSummary {
                scenario: name.clone(),
                method,
                replicates: recs.len(),
                failures: failures.iter().filter(|f| f.scenario == name && f.method == method).count(),
                fpr_mean: mean(&fprs),
                fnr_mean: mean(&fnrs),
                fpr: quartiles(&fprs),
                fnr: quartiles(&fnrs),
            });
            for m in 0..cfg.m {
                let fpr_m: Vec<f64> = recs.iter().map(|r| r.fpr_by_dataset[m]).collect();
                let fnr_m: Vec<f64> = recs.iter().map(|r| r.fnr_by_dataset[m]).collect();
                for k in 0..2 {
                    let mses: Vec<f64> = recs.iter().map(|r| r.mse[m][k]).collect();
                    cells.push(CellSummary {
                        scenario: name.clone(),
                        method,
                        dataset: m + 1,
                        response: k + 1,
                        replicates: recs.len(),
                        mse: quartiles(&mses),
                        fpr: quartiles(&fpr_m),
                        fnr: quartiles(&fnr_m),
                        fpr_mean: mean(&fpr_m),
                        fnr_mean: mean(&fnr_m),
                    });
                }
            }
        }
    }

    Ok(StudyMetrics {
        mode: options.mode,
        records,
        failures,
        cells,
        methods: summaries,
        absent_methods: vec!["mglasso".to_string()],
    })
}

impl StudyMetrics {
    /// Long-format rows: one per (scenario, method, dataset, response,
    /// replicate). FPR/FNR are the per-dataset values.
    pub fn boxplot_rows(&self) -> Vec<BoxplotRow> {
        let mut rows = Vec::new();
        for rec in &self.records {
            for (m, per_response) in rec.mse.iter().enumerate() {
                for (k, &value) in per_response.iter().enumerate() {
                    rows.push(BoxplotRow {
                        scenario: rec.scenario.clone(),
                        method: rec.method.label().to_string(),
                        dataset: m + 1,
                        response: k + 1,
                        replicate: rec.replicate,
                        mse: value,
                        fpr: rec.fpr_by_dataset[m],
                        fnr: rec.fnr_by_dataset[m],
                    });
                }
            }
        }
        rows
    }

    pub fn records_for<'a>(&'a self, scenario: &'a str, method: Method) -> impl Iterator<Item = &'a ReplicateMetrics> {
        self.records.iter().filter(move |r| r.scenario == scenario && r.method == method)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate() {
        let v = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(median(&v), 2.5);
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert!((quantile(&v, 0.25) - 1.75).abs() < 1e-15);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn empty_method_list_is_rejected() {
        let cfg = SimConfig::new(2, 15, 5, 0.1, 0.1, 1).unwrap();
        assert!(run_study(&[cfg], &[], &StudyOptions::default()).is_err());
    }
}
