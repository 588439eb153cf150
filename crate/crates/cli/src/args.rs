use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "imreg", version, about = "Sparse integrative multivariate regression across datasets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the model at a single (lambda, gamma).
    Fit(FitArgs),
    /// Select (lambda, gamma) by K-fold cross-validation and refit.
    Cv(CvArgs),
    /// Run the Monte Carlo comparison study.
    Simulate(SimulateArgs),
    /// Summarize a saved model: coefficients, supports, diagnostics.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scale {
    Original,
    Standardized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Paper,
    Conventional,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct Solver {
    /// Stopping threshold on successive augmented Lagrangian values
    /// (default 1e-13 for fit, 1e-7 for cv and simulate).
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset directory holding y.csv, x.csv and optionally z.csv; repeat per dataset.
    #[arg(long = "data", action = ArgAction::Append)]
    pub data: Vec<PathBuf>,
    /// Standardize covariates per dataset before fitting.
    #[arg(long, action = ArgAction::Set)]
    pub standardize: Option<bool>,
    /// Scale of reported coefficients when standardizing.
    #[arg(long, value_enum)]
    pub coefficient_scale: Option<Scale>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub solver: Solver,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub solver: Solver,
    /// `auto`, `auto:NLxNG[:ratio]`, or `lambda=a,b,..;gamma=c,d,..`.
    #[arg(long)]
    pub grid: Option<String>,
    /// Number of folds.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub solver: Solver,
    /// Scenario label such as M2_n15_s5_rx01_ry01, or `all`; repeatable.
    #[arg(long = "scenario", action = ArgAction::Append)]
    pub scenarios: Vec<String>,
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Held-out rows per dataset for prediction error.
    #[arg(long)]
    pub n_test: Option<usize>,
    /// Reuse the first replicate's designs and redraw only the noise.
    #[arg(long, action = ArgAction::Set)]
    pub fixed_design: Option<bool>,
    /// Comma-separated subset of MR,UR,lasso,mlasso.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub metric_mode: Option<Mode>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub common: Common,
    /// Saved model JSON (as written by `fit` or `cv`).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Dataset directories to re-evaluate the objective and KKT residual on.
    #[arg(long = "data", action = ArgAction::Append)]
    pub data: Vec<PathBuf>,
}
