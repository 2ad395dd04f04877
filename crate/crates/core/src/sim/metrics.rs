use crate::error::{invalid, Result};
use crate::vote::Sign;

use super::TruthSpec;

fn check_len(estimate: &[Sign], truth: &TruthSpec) -> Result<()> {
    if estimate.len() != truth.p() {
        return invalid(format!("estimate has length {}, truth has {}", estimate.len(), truth.p()));
    }
    Ok(())
}

/// Sign-aware false discovery rate: nonzeros off the support plus wrong signs
/// on it, over the number of nonzeros (floored at one).
pub fn fdr(estimate: &[Sign], truth: &TruthSpec) -> Result<f64> {
    check_len(estimate, truth)?;
    let theta = truth.theta();
    let false_discoveries = estimate
        .iter()
        .zip(theta)
        .filter(|(&q, &t)| match q {
            Sign::Zero => false,
            _ => t == 0.0 || q != Sign::of(t),
        })
        .count();
    let discoveries = estimate.iter().filter(|q| !q.is_zero()).count();
    Ok(false_discoveries as f64 / discoveries.max(1) as f64)
}

/// Fraction of the true support recovered with the correct sign (zero when the support is empty).
pub fn power(estimate: &[Sign], truth: &TruthSpec) -> Result<f64> {
    check_len(estimate, truth)?;
    let hits = truth.support().iter().filter(|&&l| estimate[l] == Sign::of(truth.theta()[l])).count();
    Ok(hits as f64 / truth.support().len().max(1) as f64)
}
