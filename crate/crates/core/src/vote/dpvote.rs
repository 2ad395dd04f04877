use crate::error::{invalid, Result};
use crate::privrand::RandomStream;

use super::{peeling_with, NoiseScale, PrivacyBudget, Sign, SignMatrix, SignSelection, VoteCounts};

/// Probabilities of reporting `[+1, 0, −1]` for a row with `counts` under the
/// exponential mechanism with weights `exp(ε′·utility/4)`.
///
/// Exponents are shifted by their maximum before exponentiating, so the result
/// is finite for any number of machines.
pub fn sign_probabilities(counts: VoteCounts, eps_prime: f64) -> [f64; 3] {
    let exponents = Sign::ALL.map(|s| eps_prime * counts.utility(s) as f64 / 4.0);
    let top = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights = exponents.map(|e| (e - top).exp());
    let total: f64 = weights.iter().sum();
    weights.map(|w| w / total)
}

fn noiseless_probabilities(counts: VoteCounts) -> [f64; 3] {
    let utilities = Sign::ALL.map(|s| counts.utility(s));
    let top = *utilities.iter().max().expect("three candidates");
    let hits = utilities.iter().filter(|&&u| u == top).count() as f64;
    utilities.map(|u| if u == top { 1.0 / hits } else { 0.0 })
}

/// Sample one sign for a row by the exponential mechanism at level `eps_prime`.
pub fn exp_mech_sign(counts: VoteCounts, eps_prime: f64, stream: &mut RandomStream) -> Result<Sign> {
    exp_mech_sign_with(counts, eps_prime, NoiseScale::CALIBRATED, stream)
}

pub fn exp_mech_sign_with(
    counts: VoteCounts,
    eps_prime: f64,
    noise: NoiseScale,
    stream: &mut RandomStream,
) -> Result<Sign> {
    noise.validate()?;
    if !(eps_prime > 0.0) || !eps_prime.is_finite() {
        return invalid(format!("eps_prime must be positive and finite, got {eps_prime}"));
    }
    let probs = if noise.is_noiseless() {
        noiseless_probabilities(counts)
    } else {
        sign_probabilities(counts, eps_prime / noise.0)
    };
    Ok(Sign::ALL[stream.sample_categorical(&probs)?])
}

/// Differentially private majority vote.
///
/// Peels `s̃` candidate coordinates at `(ε/2, δ/2)`, then samples a sign for
/// each candidate with the exponential mechanism at `ε′`. Candidates that draw
/// a null sign are dropped, so the selection can be empty.
pub fn dpvote(matrix: &SignMatrix, budget: &PrivacyBudget, stream: &mut RandomStream) -> Result<SignSelection> {
    dpvote_with(matrix, budget, NoiseScale::CALIBRATED, stream)
}

pub fn dpvote_with(
    matrix: &SignMatrix,
    budget: &PrivacyBudget,
    noise: NoiseScale,
    stream: &mut RandomStream,
) -> Result<SignSelection> {
    let candidates = peeling_with(matrix, &budget.halved(), noise, stream)?;
    let eps_prime = budget.eps_prime();
    let mut signs = vec![Sign::Zero; matrix.p()];
    for &l in &candidates {
        signs[l] = exp_mech_sign_with(matrix.counts(l), eps_prime, noise, stream)?;
    }
    Ok(SignSelection::new(candidates, signs))
}
