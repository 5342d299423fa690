//! Accuracy metrics of a range-profile estimate.

use serde::{Deserialize, Serialize};

use crate::c64;
use crate::error::{Error, Result};

/// `Tr(K_ε)/M`.
pub fn mse_from_posterior(posterior_diag: &[f64]) -> f64 {
    crate::bayes::mean(posterior_diag)
}

/// `‖γ − γ̂‖² / M`.
pub fn mse_ground_truth(truth: &[c64], estimate: &[c64]) -> Result<f64> {
    if truth.len() != estimate.len() {
        return Err(Error::DimensionMismatch {
            what: "estimate length",
            expected: truth.len(),
            found: estimate.len(),
        });
    }
    if truth.is_empty() {
        return Ok(0.0);
    }
    Ok(truth.iter().zip(estimate).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() / truth.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportMetrics {
    pub precision: f64,
    pub recall: f64,
    /// Precision had no estimated bins to count and was set to 1.
    pub precision_undefined: bool,
}

/// Precision of `estimated` against the true support, and recall over true
/// scatterers with `20 log10 |γ|` above `floor_db`.
pub fn support_metrics(true_support: &[usize], estimated: &[usize], gamma: &[c64], floor_db: f64) -> SupportMetrics {
    let hit = |m: &usize| true_support.contains(m);
    let (precision, precision_undefined) = if estimated.is_empty() {
        (1.0, true)
    } else {
        (estimated.iter().filter(|m| hit(m)).count() as f64 / estimated.len() as f64, false)
    };
    let significant: Vec<usize> = true_support
        .iter()
        .copied()
        .filter(|&m| 20.0 * gamma[m].norm().log10() > floor_db)
        .collect();
    let recall = if significant.is_empty() {
        1.0
    } else {
        significant.iter().filter(|m| estimated.contains(m)).count() as f64 / significant.len() as f64
    };
    SupportMetrics {
        precision,
        recall,
        precision_undefined,
    }
}

/// Power in dB, `None` for zero.
pub fn power_db(z: c64) -> Option<f64> {
    let p = z.norm_sqr();
    (p > 0.0).then(|| 10.0 * p.log10())
}
