use crate::error::{invalid, Result};
use crate::privrand::RandomStream;

use super::{PrivacyBudget, SignMatrix};

/// Multiplier on every calibrated noise level of a mechanism.
///
/// `1.0` is the calibrated mechanism. `0.0` is the noiseless limit (noisy
/// argmax becomes argmax, the exponential mechanism becomes uniform over its
/// best candidates). Anything else deliberately mis-calibrates the mechanism,
/// which the privacy audit uses as a mutation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseScale(pub f64);

impl NoiseScale {
    pub const CALIBRATED: NoiseScale = NoiseScale(1.0);
    pub const NOISELESS: NoiseScale = NoiseScale(0.0);

    pub fn is_noiseless(self) -> bool {
        self.0 == 0.0
    }

    pub(crate) fn validate(self) -> Result<()> {
        if !(self.0 >= 0.0) || !self.0.is_finite() {
            return invalid(format!("noise multiplier must be finite and non-negative, got {}", self.0));
        }
        Ok(())
    }
}

impl Default for NoiseScale {
    fn default() -> Self {
        NoiseScale::CALIBRATED
    }
}

/// Iterative noisy argmax. Each of the `k` rounds draws one fresh Laplace
/// variable per coordinate (including already-chosen ones, which are
/// discarded) so the number of draws does not depend on the data. Ties go to
/// the lowest index. `scale == 0` disables the noise.
pub(crate) fn noisy_top_k(scores: &[f64], k: usize, scale: f64, stream: &mut RandomStream) -> Result<Vec<usize>> {
    let p = scores.len();
    if k > p {
        return invalid(format!("cannot select {k} coordinates out of {p}"));
    }
    let mut taken = vec![false; p];
    let mut order = Vec::with_capacity(k);
    for _ in 0..k {
        let mut best: Option<(usize, f64)> = None;
        for l in 0..p {
            let noise = if scale > 0.0 { stream.sample_laplace(scale)? } else { 0.0 };
            if taken[l] {
                continue;
            }
            let value = scores[l] + noise;
            if best.map_or(true, |(_, v)| value > v) {
                best = Some((l, value));
            }
        }
        let (l, _) = best.expect("k <= p leaves a free coordinate each round");
        taken[l] = true;
        order.push(l);
    }
    Ok(order)
}

/// Private top-`s̃` selection on the stability scores of `matrix`.
///
/// Returns the selected coordinates in selection order. Runs at exactly the
/// given budget; DPVote calls it with `budget.halved()`.
pub fn peeling(matrix: &SignMatrix, budget: &PrivacyBudget, stream: &mut RandomStream) -> Result<Vec<usize>> {
    peeling_with(matrix, budget, NoiseScale::CALIBRATED, stream)
}

pub fn peeling_with(
    matrix: &SignMatrix,
    budget: &PrivacyBudget,
    noise: NoiseScale,
    stream: &mut RandomStream,
) -> Result<Vec<usize>> {
    noise.validate()?;
    if budget.s_tilde() > matrix.p() {
        return invalid(format!("s_tilde = {} exceeds p = {}", budget.s_tilde(), matrix.p()));
    }
    let scores: Vec<f64> = matrix.all_counts().iter().map(|c| c.stability() as f64).collect();
    noisy_top_k(&scores, budget.s_tilde(), budget.peeling_scale() * noise.0, stream)
}
