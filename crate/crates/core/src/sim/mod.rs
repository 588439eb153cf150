//! Simulation harness: scenarios, data generation, baselines and metrics.

pub mod baselines;
pub mod config;
pub mod generate;
pub mod metrics;
pub mod study;
pub mod truth;

pub use baselines::{fit_method, fit_mlasso, fit_ur, Method, Tuning};
pub use config::SimConfig;
pub use generate::{gen_ar1_rows, generate, SimData};
pub use metrics::{fpr_fnr, mse, MetricMode};
pub use study::{run_study, BoxplotRow, StudyMetrics, StudyOptions};
pub use truth::{truth, TruthSet};
