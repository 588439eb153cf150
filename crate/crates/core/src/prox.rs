//! Soft-thresholding operators.
//!
//! `S(a, b) = sign(a)(|a| − b)₊` is the proximal map of `b|·|`, and
//! `𝒮(c, d) = (1 − d/‖c‖₂)₊ c` is the proximal map of `d‖·‖₂`.

use crate::error::{Error, Result};

/// Scalar soft-threshold `sign(a)·max(|a| − b, 0)`.
pub fn soft_threshold_scalar(a: f64, b: f64) -> Result<f64> {
    check_threshold(b)?;
    Ok(shrink(a, b))
}

/// Group soft-threshold `(1 − d/‖c‖₂)₊ · c`.
///
/// Returns the zero vector whenever `‖c‖₂ ≤ d`, which covers `c = 0`.
pub fn soft_threshold_vector(c: &[f64], d: f64) -> Result<Vec<f64>> {
    check_threshold(d)?;
    let mut out = c.to_vec();
    group_shrink(&mut out, d);
    Ok(out)
}

fn check_threshold(t: f64) -> Result<()> {
    if t >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("threshold must be >= 0, got {t}")))
    }
}

#[inline]
pub(crate) fn shrink(a: f64, b: f64) -> f64 {
    if a > b {
        a - b
    } else if a < -b {
        a + b
    } else {
        0.0
    }
}

/// In-place group soft-threshold; returns the scaling factor applied.
#[inline]
pub(crate) fn group_shrink(c: &mut [f64], d: f64) -> f64 {
    let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    let factor = if norm <= d { 0.0 } else { 1.0 - d / norm };
    for v in c.iter_mut() {
        *v *= factor;
    }
    factor
}
