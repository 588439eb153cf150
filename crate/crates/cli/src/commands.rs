use std::path::{Path, PathBuf};

use imreg_core::admm::kkt_residual;
use imreg_core::io::{
    self, coefficient_csv, coefficient_rows, cv_matrix_csv, load_dataset, BlockNames, BlockPaths, CoefficientRow,
    CoefficientScale, FitDiagnostics, LoadedDataset, SavedModel, Scaling,
};
use imreg_core::selection::{self, GridSpec};
use imreg_core::sim::{run_study, MetricMode, Method, SimConfig, StudyOptions, Tuning};
use imreg_core::{objective, FitReport, HyperParams, IntegratedDataset, ModelFit, SolverOptions};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{Common, CvArgs, DataArgs, FitArgs, Mode, ReportArgs, Scale, SimulateArgs, Solver};
use crate::config::RunConfig;
use crate::failure::CliError;

const DEFAULT_OUT: &str = "imreg_out";
const DEFAULT_SEED: u64 = 0;

type Outcome = Result<Value, CliError>;

/// Settings shared by every subcommand after merging flags over the config file.
pub struct Base {
    pub cfg: RunConfig,
    pub out: PathBuf,
    pub threads: Option<usize>,
}

pub fn base(common: &Common) -> Result<Base, CliError> {
    let cfg = RunConfig::load(common.config.as_deref())?;
    let threads = common.threads.or(cfg.threads);
    if threads == Some(0) {
        return Err(CliError::usage("--threads must be at least 1"));
    }
    let out = common
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    Ok(Base { cfg, out, threads })
}

fn solver_options(flags: &Solver, cfg: &RunConfig, mut opts: SolverOptions) -> Result<SolverOptions, CliError> {
    if let Some(tol) = flags.tol.or(cfg.tol) {
        opts.tol = tol;
    }
    if let Some(it) = flags.max_iter.or(cfg.max_iter) {
        opts.max_iter = it;
    }
    opts.validate().map_err(|e| CliError::usage(e.to_string()))?;
    Ok(opts)
}

fn data_paths(flags: &[PathBuf], cfg: &RunConfig) -> Result<Vec<BlockPaths>, CliError> {
    let dirs: Vec<PathBuf> = if flags.is_empty() { cfg.data.clone().unwrap_or_default() } else { flags.to_vec() };
    if dirs.is_empty() {
        return Err(CliError::usage("no datasets given; pass --data DIR once per dataset"));
    }
    dirs.iter()
        .map(|d| {
            let paths = BlockPaths::from_dir(d);
            for f in [&paths.y, &paths.x] {
                if !f.is_file() {
                    return Err(CliError::usage(format!("missing input file {}", f.display())));
                }
            }
            Ok(paths)
        })
        .collect()
}

fn parse_scale(flag: Option<Scale>, cfg: &RunConfig) -> Result<CoefficientScale, CliError> {
    if let Some(s) = flag {
        return Ok(match s {
            Scale::Original => CoefficientScale::Original,
            Scale::Standardized => CoefficientScale::Standardized,
        });
    }
    match cfg.coefficient_scale.as_deref() {
        None | Some("original") => Ok(CoefficientScale::Original),
        Some("standardized") => Ok(CoefficientScale::Standardized),
        Some(other) => Err(CliError::usage(format!("unknown coefficient scale {other:?}"))),
    }
}

fn parse_grid(flag: Option<&str>, cfg: &RunConfig) -> Result<GridSpec, CliError> {
    match flag.or(cfg.grid.as_deref()) {
        Some(s) => s.parse().map_err(|e: imreg_core::Error| CliError::usage(e.to_string())),
        None => Ok(GridSpec::default()),
    }
}

fn parse_k(flag: Option<usize>, cfg: &RunConfig) -> Result<usize, CliError> {
    let k = flag.or(cfg.k).unwrap_or(selection::DEFAULT_FOLDS);
    if k < 2 {
        return Err(CliError::usage(format!("--k must be at least 2, got {k}")));
    }
    Ok(k)
}

/// Loaded data plus the matrices the solver actually sees.
struct Prepared {
    loaded: LoadedDataset,
    working: IntegratedDataset,
    scaling: Option<Scaling>,
    scale: CoefficientScale,
}

fn prepare(flags: &DataArgs, cfg: &RunConfig) -> Result<Prepared, CliError> {
    let paths = data_paths(&flags.data, cfg)?;
    let standardize = flags.standardize.or(cfg.standardize).unwrap_or(false);
    let scale = parse_scale(flags.coefficient_scale, cfg)?;
    let loaded = load_dataset(&paths)?;
    let (working, scaling) = if standardize {
        let (d, s) = loaded.standardized()?;
        (d, Some(s))
    } else {
        (loaded.data.clone(), None)
    };
    Ok(Prepared { loaded, working, scaling, scale })
}

fn diagnostics(rep: &FitReport) -> FitDiagnostics {
    FitDiagnostics {
        iterations: rep.iterations,
        converged: rep.converged,
        objective: rep.objective(),
        kkt_residual: rep.kkt_residual,
        consensus_gap: rep.consensus_gap,
    }
}

/// Saved model in the requested coefficient scale, with names and diagnostics.
fn saved_model(prep: &Prepared, rep: &FitReport, hp: HyperParams) -> Result<SavedModel, CliError> {
    let (fit, scale) = match (&prep.scaling, prep.scale) {
        (Some(s), CoefficientScale::Original) => (s.to_original(&rep.fit)?, CoefficientScale::Original),
        (Some(_), CoefficientScale::Standardized) => (rep.fit.clone(), CoefficientScale::Standardized),
        (None, _) => (rep.fit.clone(), CoefficientScale::Original),
    };
    let mut saved = SavedModel::new(&fit, hp);
    saved.scale = scale;
    saved.names = Some(prep.loaded.names.clone());
    saved.diagnostics = Some(diagnostics(rep));
    saved.scaling = prep.scaling.clone();
    Ok(saved)
}

fn write_model_outputs(out: &Path, saved: &SavedModel) -> Result<Vec<&'static str>, CliError> {
    let fit = saved.to_fit()?;
    io::write_json(out.join("model.json"), saved)?;
    let rows = coefficient_rows(&fit, saved.names.as_deref());
    io::write_atomic(out.join("coefficients.csv"), &coefficient_csv(&rows)?)?;
    Ok(vec!["model.json", "coefficients.csv"])
}

pub fn fit(args: &FitArgs, base: &Base) -> Outcome {
    let cfg = &base.cfg;
    let lambda = args.lambda.or(cfg.lambda).ok_or_else(|| CliError::usage("fit needs --lambda"))?;
    let gamma = args.gamma.or(cfg.gamma).ok_or_else(|| CliError::usage("fit needs --gamma"))?;
    let hp = HyperParams::new(lambda, gamma).map_err(|e| CliError::usage(e.to_string()))?;
    let opts = solver_options(&args.solver, cfg, SolverOptions::default())?;
    let prep = prepare(&args.data, cfg)?;
    let rep = imreg_core::fit(&prep.working, &hp, &opts, None)?;
    let saved = saved_model(&prep, &rep, hp)?;
    let files = write_model_outputs(&base.out, &saved)?;
    Ok(json!({
        "command": "fit",
        "lambda": lambda,
        "gamma": gamma,
        "diagnostics": diagnostics(&rep),
        "files": files,
    }))
}

#[derive(Serialize)]
struct CvSummary<'a> {
    k: usize,
    seed: u64,
    standardized: bool,
    lambdas: &'a [f64],
    gammas: &'a [f64],
    best_lambda: f64,
    best_gamma: f64,
    best_score: f64,
    /// Score at the largest (λ, γ), where every coefficient is zero.
    null_score: f64,
    refit: FitDiagnostics,
}

pub fn cv(args: &CvArgs, base: &Base) -> Outcome {
    let cfg = &base.cfg;
    let opts = solver_options(&args.solver, cfg, SolverOptions::sweep())?;
    let spec = parse_grid(args.grid.as_deref(), cfg)?;
    let k = parse_k(args.k, cfg)?;
    let seed = args.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    let prep = prepare(&args.data, cfg)?;
    let grid = spec.resolve(&prep.working)?;
    let res = selection::select(&prep.working, &grid, k, seed, &opts)?;
    let hp = HyperParams::new(res.best_lambda, res.best_gamma)?;
    let best = res.lambdas.iter().position(|&l| l == res.best_lambda).expect("selected λ is on the grid");
    let best_g = res.gammas.iter().position(|&g| g == res.best_gamma).expect("selected γ is on the grid");
    let summary = CvSummary {
        k,
        seed,
        standardized: prep.scaling.is_some(),
        lambdas: &res.lambdas,
        gammas: &res.gammas,
        best_lambda: res.best_lambda,
        best_gamma: res.best_gamma,
        best_score: res.cv_matrix[(best, best_g)],
        null_score: res.cv_matrix[(0, 0)],
        refit: diagnostics(&res.refit),
    };
    io::write_atomic(base.out.join("cv_matrix.csv"), &cv_matrix_csv(&res)?)?;
    io::write_json(base.out.join("cv.json"), &summary)?;
    let saved = saved_model(&prep, &res.refit, hp)?;
    let mut files = vec!["cv_matrix.csv", "cv.json"];
    files.extend(write_model_outputs(&base.out, &saved)?);
    Ok(json!({
        "command": "cv",
        "best_lambda": res.best_lambda,
        "best_gamma": res.best_gamma,
        "best_score": summary.best_score,
        "null_score": summary.null_score,
        "files": files,
    }))
}

fn parse_methods(flag: Option<&Vec<String>>, cfg: &RunConfig) -> Result<Vec<Method>, CliError> {
    let Some(list) = flag.or(cfg.methods.as_ref()) else { return Ok(Method::ALL.to_vec()) };
    let mut out: Vec<Method> = Vec::new();
    for name in list {
        let m: Method = name.parse().map_err(|e: imreg_core::Error| CliError::usage(e.to_string()))?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err(CliError::usage("no methods given"));
    }
    Ok(out)
}

fn parse_mode(flag: Option<Mode>, cfg: &RunConfig) -> Result<MetricMode, CliError> {
    match flag {
        Some(Mode::Paper) => Ok(MetricMode::Paper),
        Some(Mode::Conventional) => Ok(MetricMode::Conventional),
        None => match cfg.metric_mode.as_deref() {
            None => Ok(MetricMode::default()),
            Some(s) => s.parse().map_err(|e: imreg_core::Error| CliError::usage(e.to_string())),
        },
    }
}

pub fn simulate(args: &SimulateArgs, base: &Base) -> Outcome {
    let cfg = &base.cfg;
    let seed = args.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    let labels: Vec<String> = if args.scenarios.is_empty() {
        cfg.scenarios.clone().unwrap_or_default()
    } else {
        args.scenarios.clone()
    };
    if labels.is_empty() {
        return Err(CliError::usage("no scenarios given; pass --scenario NAME or --scenario all"));
    }
    let mut configs: Vec<SimConfig> = Vec::new();
    for label in &labels {
        let cells = if label == "all" {
            SimConfig::full_design(seed)
        } else {
            vec![SimConfig::from_name(label, seed).map_err(|e| CliError::usage(e.to_string()))?]
        };
        for c in cells {
            if !configs.iter().any(|x| x.name() == c.name()) {
                configs.push(c);
            }
        }
    }
    let replicates = args.replicates.or(cfg.replicates);
    let n_test = args.n_test.or(cfg.n_test);
    let fixed = args.fixed_design.or(cfg.fixed_design);
    for c in &mut configs {
        if let Some(r) = replicates {
            c.replicates = r;
        }
        if let Some(n) = n_test {
            c.n_test = n;
        }
        if let Some(f) = fixed {
            c.fixed_design = f;
        }
        c.validate().map_err(|e| CliError::usage(e.to_string()))?;
    }
    if configs.iter().any(|c| c.replicates == 0 || c.n_test == 0) {
        return Err(CliError::usage("replicates and n-test must be at least 1"));
    }
    let options = StudyOptions {
        tuning: Tuning {
            k: parse_k(args.k, cfg)?,
            grid: parse_grid(args.grid.as_deref(), cfg)?,
            solver: solver_options(&args.solver, cfg, SolverOptions::sweep())?,
        },
        mode: parse_mode(args.metric_mode, cfg)?,
    };
    let methods = parse_methods(args.methods.as_ref(), cfg)?;
    let study = run_study(&configs, &methods, &options)?;
    io::write_json(base.out.join("study.json"), &study)?;
    io::write_atomic(base.out.join("boxplot.csv"), &io::boxplot_csv(&study.boxplot_rows())?)?;
    Ok(json!({
        "command": "simulate",
        "scenarios": configs.iter().map(SimConfig::name).collect::<Vec<_>>(),
        "records": study.records.len(),
        "failures": study.failures.len(),
        "files": ["study.json", "boxplot.csv"],
    }))
}

#[derive(Serialize)]
struct Evaluation {
    objective: f64,
    kkt_residual: f64,
}

#[derive(Serialize)]
struct SupportEntry {
    covariate: String,
    response: String,
}

#[derive(Serialize)]
struct Report {
    hyper: HyperParams,
    scale: CoefficientScale,
    #[serde(skip_serializing_if = "Option::is_none")]
    diagnostics: Option<FitDiagnostics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    evaluation: Option<Evaluation>,
    /// Nonzero shared-coefficient groups (identical across datasets).
    shared_support: Vec<SupportEntry>,
    /// Nonzero dataset-specific coefficients, per dataset.
    specific_support: Vec<Vec<SupportEntry>>,
    coefficients: Vec<CoefficientRow>,
}

fn name_of(list: Option<&Vec<String>>, i: usize) -> String {
    list.and_then(|l| l.get(i).cloned()).unwrap_or_else(|| (i + 1).to_string())
}

fn supports(fit: &ModelFit, names: Option<&[BlockNames]>) -> (Vec<SupportEntry>, Vec<Vec<SupportEntry>>) {
    let first = names.and_then(|n| n.first());
    let sb = fit.support_b();
    let mut shared = Vec::new();
    for j in 0..sb.nrows() {
        for k in 0..sb.ncols() {
            if sb[(j, k)] {
                shared.push(SupportEntry {
                    covariate: name_of(first.map(|b| &b.x), j),
                    response: name_of(first.map(|b| &b.y), k),
                });
            }
        }
    }
    let specific = fit
        .support_c()
        .iter()
        .enumerate()
        .map(|(m, sc)| {
            let bn = names.and_then(|n| n.get(m));
            let mut v = Vec::new();
            for j in 0..sc.nrows() {
                for k in 0..sc.ncols() {
                    if sc[(j, k)] {
                        v.push(SupportEntry {
                            covariate: name_of(bn.map(|b| &b.z), j),
                            response: name_of(bn.map(|b| &b.y), k),
                        });
                    }
                }
            }
            v
        })
        .collect();
    (shared, specific)
}

pub fn report(args: &ReportArgs, base: &Base, write_files: bool) -> Outcome {
    let cfg = &base.cfg;
    let path = args
        .model
        .clone()
        .or_else(|| cfg.model.clone())
        .ok_or_else(|| CliError::usage("report needs --model PATH"))?;
    if !path.is_file() {
        return Err(CliError::usage(format!("missing model file {}", path.display())));
    }
    let saved: SavedModel = io::read_json(&path)?;
    let fit = saved.to_fit()?;
    let data_flags: Vec<PathBuf> = args.data.clone();
    let evaluation = if data_flags.is_empty() && cfg.data.is_none() {
        None
    } else {
        let loaded = load_dataset(&data_paths(&data_flags, cfg)?)?;
        // Objective and KKT residual are evaluated on the scale the model was fit on.
        let (data, working_fit) = match (&saved.scaling, saved.scale) {
            (Some(s), CoefficientScale::Original) => (s.apply(&loaded.data)?, s.to_standardized(&fit)?),
            (Some(s), CoefficientScale::Standardized) => (s.apply(&loaded.data)?, fit.clone()),
            (None, _) => (loaded.data.clone(), fit.clone()),
        };
        Some(Evaluation {
            objective: objective(&data, &working_fit, &saved.hyper)?,
            kkt_residual: kkt_residual(&data, &working_fit, &saved.hyper)?,
        })
    };
    let (shared_support, specific_support) = supports(&fit, saved.names.as_deref());
    let rows = coefficient_rows(&fit, saved.names.as_deref());
    let report = Report {
        hyper: saved.hyper,
        scale: saved.scale,
        diagnostics: saved.diagnostics.clone(),
        evaluation,
        shared_support,
        specific_support,
        coefficients: rows.clone(),
    };
    if write_files {
        io::write_json(base.out.join("report.json"), &report)?;
        io::write_atomic(base.out.join("coefficients.csv"), &coefficient_csv(&rows)?)?;
        Ok(json!({ "command": "report", "files": ["report.json", "coefficients.csv"] }))
    } else {
        Ok(serde_json::to_value(&report).map_err(imreg_core::Error::from)?)
    }
}
