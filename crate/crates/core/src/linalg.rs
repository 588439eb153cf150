use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{Error, Result};

/// Solver for `(AᵀA + s·I) x = b`, computed once per fit and reused for every
/// ridge-type block update. When `A` has fewer rows than columns the solve
/// goes through the `n × n` system `s·I + AAᵀ` (Woodbury identity).
#[derive(Debug, Clone)]
pub struct CachedFactorization {
    kind: Kind,
    dim: usize,
}

#[derive(Debug, Clone)]
enum Kind {
    Empty,
    Dense(Cholesky<f64, Dyn>),
    LowRank {
        a: DMatrix<f64>,
        inner: Cholesky<f64, Dyn>,
        shift: f64,
    },
}

fn shifted_cholesky(mut gram: DMatrix<f64>, shift: f64) -> Result<Cholesky<f64, Dyn>> {
    let dim = gram.nrows();
    for i in 0..dim {
        gram[(i, i)] += shift;
    }
    gram.cholesky()
        .ok_or_else(|| Error::Factorization(format!("{dim}×{dim} ridge Gram matrix is not positive definite")))
}

impl CachedFactorization {
    /// Factor `aᵀa + shift·I`. A zero-column `a` yields an empty factor.
    pub fn ridge_gram(a: &DMatrix<f64>, shift: f64) -> Result<Self> {
        let (n, dim) = a.shape();
        let kind = if dim == 0 {
            Kind::Empty
        } else if n < dim && shift > 0.0 {
            Kind::LowRank {
                inner: shifted_cholesky(a * a.transpose(), shift)?,
                a: a.clone(),
                shift,
            }
        } else {
            Kind::Dense(shifted_cholesky(a.tr_mul(a), shift)?)
        };
        Ok(Self { kind, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn solve(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        debug_assert_eq!(rhs.nrows(), self.dim);
        match &self.kind {
            Kind::Empty => DMatrix::zeros(0, rhs.ncols()),
            Kind::Dense(c) => c.solve(rhs),
            Kind::LowRank { a, inner, shift } => {
                let t = inner.solve(&(a * rhs));
                let mut x = rhs.clone();
                x.gemm_tr(-1.0, a, &t, 1.0);
                x / *shift
            }
        }
    }
}
