//! Sparse multivariate regression for integrating several datasets that share
//! a set of covariates.
//!
//! Shared-covariate coefficients are tied across datasets by a group lasso,
//! so every dataset selects the same shared covariates; dataset-specific
//! coefficients get an ordinary lasso. The estimator is fitted by ADMM
//! ([`admm::fit`]), tuned by K-fold cross-validation ([`selection::select`]),
//! and studied with the Monte Carlo harness in [`sim`].

pub mod admm;
pub mod error;
pub mod io;
pub mod linalg;
pub mod model;
pub mod prox;
pub mod selection;
pub mod sim;

pub use admm::{fit, AdmmState, FitReport, SolverOptions};
pub use error::{Error, Result};
pub use model::{objective, residual_matrix, DatasetBlock, HyperParams, IntegratedDataset, ModelFit};
pub use nalgebra::{DMatrix, DVector};
