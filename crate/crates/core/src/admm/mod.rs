//! ADMM solver for the group-lasso + lasso integrative regression objective.
//!
//! The problem is split with consensus copies `η_jk = β_jk` and `D^m = C^m`
//! and solved by alternating exact block minimizations of the scaled augmented
//! Lagrangian, in the order
//!
//! 1. (a) intercepts `α^m`
//! 2. (b) shared coefficients `B^m` (ridge solve against `H^m + U^m`)
//! 3. (c) specific coefficients `C^m` (ridge solve against `D^m − V^m`)
//! 4. (d) `D^m` by entrywise soft-thresholding
//! 5. (e) `η_jk` by group soft-thresholding across datasets
//! 6. (f), (g) scaled dual ascent on `u_jk` and `V^m`
//!
//! Iteration stops once two consecutive augmented Lagrangian values differ by
//! less than [`SolverOptions::tol`].

mod diagnostics;
mod state;
mod steps;

use serde::{Deserialize, Serialize};

pub use diagnostics::{kkt_residual, loss_gradients};
pub use state::{augmented_lagrangian, AdmmState};
pub use steps::{update_d, update_duals, update_eta, BlockSystem};

use crate::error::{Error, Result};
use crate::model::{self, HyperParams, IntegratedDataset, ModelFit};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Threshold on `|L^{ℓ+1} − L^ℓ|`.
    pub tol: f64,
    pub max_iter: usize,
    /// Evaluate the stopping rule every this many iterations.
    pub check_every: usize,
    /// Consecutive checks with `|ΔL| < tol` required to stop.
    #[serde(default = "default_patience")]
    pub patience: usize,
}

fn default_patience() -> usize {
    3
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-13,
            max_iter: 10_000,
            check_every: 1,
            patience: default_patience(),
        }
    }
}

impl SolverOptions {
    /// Stopping threshold used by default for grid sweeps (cross-validation
    /// and simulation), where hundreds of fits are needed.
    pub const SWEEP_TOL: f64 = 1e-7;

    /// Defaults with the looser sweep tolerance.
    pub fn sweep() -> Self {
        Self { tol: Self::SWEEP_TOL, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.max_iter == 0 || self.check_every == 0 || self.patience == 0 {
            return Err(Error::InvalidArgument("max_iter, check_every and patience must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FitReport {
    pub fit: ModelFit,
    pub iterations: usize,
    pub converged: bool,
    /// Penalized objective at the consensus variables, one entry per check.
    pub objective_trace: Vec<f64>,
    /// Augmented Lagrangian, one entry per check (entry 0 is the starting state).
    pub lagrangian_trace: Vec<f64>,
    pub kkt_residual: f64,
    pub consensus_gap: f64,
    /// Final iterate, usable as a warm start.
    pub state: AdmmState,
}

impl FitReport {
    pub fn objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace is never empty")
    }
}

/// Precompute per-dataset solve systems for a fixed `ρ`.
pub fn block_systems(data: &IntegratedDataset, rho: f64) -> Result<Vec<BlockSystem>> {
    data.blocks().iter().map(|b| BlockSystem::new(b, rho)).collect()
}

/// Run ADMM from `init` (all zeros when `None`) until the augmented Lagrangian
/// settles or `max_iter` is hit.
///
/// The reported coefficients are the consensus variables (`B^m = H^m`,
/// `C^m = D^m`), which carry exact zeros and a zero pattern of `B` shared by
/// every dataset. The reported intercepts are refit to those coefficients.
pub fn fit(
    data: &IntegratedDataset,
    hp: &HyperParams,
    opts: &SolverOptions,
    init: Option<&AdmmState>,
) -> Result<FitReport> {
    hp.validate()?;
    opts.validate()?;
    let systems = block_systems(data, hp.rho)?;
    let mut state = match init {
        Some(s) => {
            s.check_against(data)?;
            if !s.is_finite() {
                return Err(Error::NonFinite("initial ADMM state".into()));
            }
            s.clone()
        }
        None => AdmmState::zeros(data),
    };

    let mut prev = state::lagrangian_unchecked(data, &state, hp);
    let mut lagrangian_trace = vec![prev];
    let mut objective_trace = vec![consensus_objective(data, &state, hp)];
    let mut converged = false;
    let mut iterations = 0;
    let mut calm = 0;

    while iterations < opts.max_iter {
        steps::iterate(&systems, &mut state, hp);
        iterations += 1;
        if iterations % opts.check_every != 0 && iterations != opts.max_iter {
            continue;
        }
        let lag = state::lagrangian_unchecked(data, &state, hp);
        if !lag.is_finite() || !state.is_finite() {
            return Err(Error::Diverged {
                iteration: state.iter,
                detail: format!("augmented Lagrangian evaluated to {lag}"),
            });
        }
        lagrangian_trace.push(lag);
        objective_trace.push(consensus_objective(data, &state, hp));
        if (lag - prev).abs() < opts.tol {
            calm += 1;
            if calm >= opts.patience {
                converged = true;
                break;
            }
        } else {
            calm = 0;
        }
        prev = lag;
    }

    let fit = consensus_fit(&systems, &state)?;
    let final_objective = model::objective_parts(data, fit.alpha(), fit.b(), fit.c(), hp);
    *objective_trace.last_mut().expect("trace is never empty") = final_objective;
    let kkt = kkt_residual(data, &fit, hp)?;
    Ok(FitReport {
        fit,
        iterations,
        converged,
        objective_trace,
        lagrangian_trace,
        kkt_residual: kkt,
        consensus_gap: state.consensus_gap(),
        state,
    })
}

fn consensus_objective(data: &IntegratedDataset, state: &AdmmState, hp: &HyperParams) -> f64 {
    model::objective_parts(data, &state.alpha, &state.h, &state.d, hp)
}

fn consensus_fit(systems: &[BlockSystem], state: &AdmmState) -> Result<ModelFit> {
    let alpha = systems
        .iter()
        .enumerate()
        .map(|(m, sys)| sys.update_alpha(&state.h[m], &state.d[m]))
        .collect();
    ModelFit::new(alpha, state.h.clone(), state.d.clone())
}
