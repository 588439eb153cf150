use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{IntegratedDataset, ModelFit};

/// Which denominators the support-recovery rates use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricMode {
    /// FPR over the number of true nonzeros, FNR over the number of true
    /// zeros, as in the published definitions.
    #[default]
    Paper,
    /// FPR over true zeros, FNR over true nonzeros; both land in `[0, 1]`.
    Conventional,
}

impl std::str::FromStr for MetricMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Self::Paper),
            "conventional" => Ok(Self::Conventional),
            other => Err(Error::InvalidArgument(format!("unknown metric mode {other:?}"))),
        }
    }
}

/// Mean squared prediction error per dataset and response on held-out rows.
pub fn mse(fit: &ModelFit, test: &IntegratedDataset) -> Result<Vec<Vec<f64>>> {
    if fit.m() != test.m() {
        return Err(Error::Dimension("fit and test sets have different dataset counts".into()));
    }
    test.blocks()
        .iter()
        .enumerate()
        .map(|(m, blk)| {
            let pred = fit.predict(m, blk.x(), blk.z())?;
            let n = blk.n() as f64;
            Ok((blk.y() - pred)
                .column_iter()
                .map(|col| col.norm_squared() / n)
                .collect())
        })
        .collect()
}

/// `(vec B^1, …, vec B^M, vec C^1, …, vec C^M)`, column-major.
pub fn stack(fit: &ModelFit) -> Vec<f64> {
    let mut out = Vec::new();
    for b in fit.b() {
        out.extend(b.iter());
    }
    for c in fit.c() {
        out.extend(c.iter());
    }
    out
}

/// `(vec B^m, vec C^m)` for one dataset.
pub fn stack_for(fit: &ModelFit, m: usize) -> Vec<f64> {
    fit.b()[m].iter().chain(fit.c()[m].iter()).copied().collect()
}

/// False positive and false negative rates of an estimated coefficient vector
/// against the truth.
pub fn fpr_fnr(estimate: &[f64], truth: &[f64], mode: MetricMode) -> Result<(f64, f64)> {
    if estimate.len() != truth.len() {
        return Err(Error::Dimension(format!(
            "estimate has {} coefficients, truth has {}",
            estimate.len(),
            truth.len()
        )));
    }
    let mut false_pos = 0usize;
    let mut false_neg = 0usize;
    let mut true_nonzero = 0usize;
    for (&e, &t) in estimate.iter().zip(truth) {
        if t != 0.0 {
            true_nonzero += 1;
            if e == 0.0 {
                false_neg += 1;
            }
        } else if e != 0.0 {
            false_pos += 1;
        }
    }
    let true_zero = truth.len() - true_nonzero;
    let (fp_den, fn_den) = match mode {
        MetricMode::Paper => (true_nonzero, true_zero),
        MetricMode::Conventional => (true_zero, true_nonzero),
    };
    if fp_den == 0 || fn_den == 0 {
        return Err(Error::UndefinedMetric(format!(
            "truth has {true_nonzero} nonzero and {true_zero} zero entries"
        )));
    }
    Ok((false_pos as f64 / fp_den as f64, false_neg as f64 / fn_den as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn truth_40_60() -> Vec<f64> {
        (0..100).map(|i| if i < 40 { 1.0 } else { 0.0 }).collect()
    }

    #[test]
    fn perfect_recovery() {
        let t = truth_40_60();
        assert_eq!(fpr_fnr(&t, &t, MetricMode::Paper).unwrap(), (0.0, 0.0));
        assert_eq!(fpr_fnr(&t, &t, MetricMode::Conventional).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn all_nonzero_estimate() {
        let t = truth_40_60();
        let e = vec![0.3; 100];
        assert_eq!(fpr_fnr(&e, &t, MetricMode::Conventional).unwrap(), (1.0, 0.0));
        assert_eq!(fpr_fnr(&e, &t, MetricMode::Paper).unwrap(), (1.5, 0.0));
    }

    #[test]
    fn all_zero_estimate() {
        let t = truth_40_60();
        let e = vec![0.0; 100];
        assert_eq!(fpr_fnr(&e, &t, MetricMode::Conventional).unwrap(), (0.0, 1.0));
        let (fp, fnr) = fpr_fnr(&e, &t, MetricMode::Paper).unwrap();
        assert_eq!(fp, 0.0);
        assert!((fnr - 40.0 / 60.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_truth() {
        assert!(matches!(
            fpr_fnr(&[1.0, 0.0], &[0.0, 0.0], MetricMode::Paper),
            Err(Error::UndefinedMetric(_))
        ));
        assert!(fpr_fnr(&[1.0], &[1.0, 0.0], MetricMode::Paper).is_err());
    }

    #[test]
    fn parse_mode() {
        assert_eq!("paper".parse::<MetricMode>().unwrap(), MetricMode::Paper);
        assert_eq!("conventional".parse::<MetricMode>().unwrap(), MetricMode::Conventional);
        assert!("other".parse::<MetricMode>().is_err());
    }
}
