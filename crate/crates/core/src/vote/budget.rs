use crate::error::{invalid, Result};

use super::Sign;

/// Privacy level `(ε, δ)` together with the selection cap `s̃`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrivacyBudget {
    epsilon: f64,
    delta: f64,
    s_tilde: usize,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64, s_tilde: usize) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return invalid(format!("epsilon must be positive and finite, got {epsilon}"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return invalid(format!("delta must lie in (0, 1), got {delta}"));
        }
        if s_tilde == 0 {
            return invalid("selection cap s_tilde must be at least 1");
        }
        Ok(PrivacyBudget { epsilon, delta, s_tilde })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn s_tilde(&self) -> usize {
        self.s_tilde
    }

    /// The budget handed to each of the two stages of DPVote: `(ε/2, δ/2)`.
    pub fn halved(&self) -> PrivacyBudget {
        PrivacyBudget { epsilon: self.epsilon / 2.0, delta: self.delta / 2.0, s_tilde: self.s_tilde }
    }

    /// Per-round Laplace scale of peeling run at this budget:
    /// `4·sqrt(2·s̃·ln(1/δ)) / ε`.
    pub fn peeling_scale(&self) -> f64 {
        4.0 * (2.0 * self.s_tilde as f64 * (1.0 / self.delta).ln()).sqrt() / self.epsilon
    }

    /// Per-coordinate exponential-mechanism level `ε′ = ε / (4·sqrt(2·s̃·ln(2/δ)))`.
    pub fn eps_prime(&self) -> f64 {
        self.epsilon / (4.0 * (2.0 * self.s_tilde as f64 * (2.0 / self.delta).ln()).sqrt())
    }
}

/// Output of a private sign selection: the selected coordinates and their signs.
///
/// `candidates` is the peeled set `S̃` in selection order; `selected` keeps the
/// candidates whose sampled sign is nonzero, in the same order. The sign vector
/// has length `p` and is zero off `selected`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignSelection {
    candidates: Vec<usize>,
    selected: Vec<usize>,
    signs: Vec<Sign>,
}

impl SignSelection {
    /// Build from the candidate order and a full-length sign vector. Signs on
    /// coordinates outside `candidates` are cleared.
    pub fn new(candidates: Vec<usize>, mut signs: Vec<Sign>) -> Self {
        let mut keep = vec![false; signs.len()];
        for &l in &candidates {
            keep[l] = true;
        }
        for (s, k) in signs.iter_mut().zip(&keep) {
            if !k {
                *s = Sign::Zero;
            }
        }
        let selected = candidates.iter().copied().filter(|&l| !signs[l].is_zero()).collect();
        SignSelection { candidates, selected, signs }
    }

    pub fn candidates(&self) -> &[usize] {
        &self.candidates
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    pub fn signs(&self) -> &[Sign] {
        &self.signs
    }

    pub fn into_signs(self) -> Vec<Sign> {
        self.signs
    }

    pub fn p(&self) -> usize {
        self.signs.len()
    }
}
