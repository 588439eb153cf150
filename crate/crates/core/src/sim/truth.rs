use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// True coefficients of the simulation model, each `(10 + s) × 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthSet {
    pub b_star: DMatrix<f64>,
    pub c_star: Vec<DMatrix<f64>>,
}

/// Informative 10 × 2 block given column-by-column (response 1, response 2).
fn block(resp1: [f64; 10], resp2: [f64; 10]) -> DMatrix<f64> {
    DMatrix::from_fn(10, 2, |i, k| if k == 0 { resp1[i] } else { resp2[i] })
}

const ONES_THEN_ZERO: [f64; 10] = [1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
const ZERO_THEN_HALF: [f64; 10] = [0.0, 0.0, 0.0, 0.0, 0.0, 0.5, 0.5, 0.5, 0.5, 0.5];

fn padded(informative: DMatrix<f64>, s: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(10 + s, 2);
    out.rows_mut(0, 10).copy_from(&informative);
    out
}

/// Coefficients for `m` datasets with an `s`-row zero block appended.
pub fn truth(m: usize, s: usize) -> Result<TruthSet> {
    let first = block(ONES_THEN_ZERO, ZERO_THEN_HALF);
    let second = block(ZERO_THEN_HALF, ONES_THEN_ZERO);
    let third = block(
        [0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.5, 0.5, 0.5],
        [1.0, 1.0, 1.0, 0.5, 0.5, 0.5, 0.5, 0.0, 0.0, 0.0],
    );
    let c_star = match m {
        2 => vec![first.clone(), second],
        3 => vec![first.clone(), second, third],
        _ => return Err(Error::UnsupportedScenario(format!("M must be 2 or 3, got {m}"))),
    };
    Ok(TruthSet {
        b_star: padded(first, s),
        c_star: c_star.into_iter().map(|c| padded(c, s)).collect(),
    })
}

impl TruthSet {
    pub fn m(&self) -> usize {
        self.c_star.len()
    }

    /// `(vec B*, vec C*^m)` for one dataset, column-major.
    pub fn stacked_for(&self, m: usize) -> Vec<f64> {
        self.b_star.iter().chain(self.c_star[m].iter()).copied().collect()
    }

    /// `(vec B*, …, vec B*, vec C*^1, …, vec C*^M)`.
    pub fn stacked(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for _ in 0..self.m() {
            out.extend(self.b_star.iter());
        }
        for c in &self.c_star {
            out.extend(c.iter());
        }
        out
    }
}
