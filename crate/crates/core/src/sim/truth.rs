use crate::error::{invalid, Result};
use crate::vote::Sign;

/// The true parameter and its signed support.
#[derive(Clone, Debug, PartialEq)]
pub struct TruthSpec {
    theta: Vec<f64>,
    support: Vec<usize>,
    positive: Vec<usize>,
    negative: Vec<usize>,
}

/// Nonzero entries of the default signal: five positive magnitudes then their mirror.
pub const DEFAULT_SIGNAL: [f64; 10] = [1.0, 0.8, 0.6, 0.4, 0.2, -0.2, -0.4, -0.6, -0.8, -1.0];

impl TruthSpec {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() {
            return invalid("theta must have at least one coordinate");
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return invalid("theta must be finite");
        }
        let positive = (0..theta.len()).filter(|&l| theta[l] > 0.0).collect();
        let negative = (0..theta.len()).filter(|&l| theta[l] < 0.0).collect();
        let support = (0..theta.len()).filter(|&l| theta[l] != 0.0).collect();
        Ok(TruthSpec { theta, support, positive, negative })
    }

    /// `(1, 0.8, …, 0.2, −0.2, …, −1, 0, …, 0)` of length `p ≥ 10`.
    pub fn default_signal(p: usize) -> Result<Self> {
        if p < DEFAULT_SIGNAL.len() {
            return invalid(format!("the default signal needs p >= 10, got {p}"));
        }
        let mut theta = vec![0.0; p];
        theta[..DEFAULT_SIGNAL.len()].copy_from_slice(&DEFAULT_SIGNAL);
        Self::new(theta)
    }

    pub fn zero(p: usize) -> Result<Self> {
        Self::new(vec![0.0; p])
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn p(&self) -> usize {
        self.theta.len()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn positive(&self) -> &[usize] {
        &self.positive
    }

    pub fn negative(&self) -> &[usize] {
        &self.negative
    }

    pub fn signs(&self) -> Vec<Sign> {
        self.theta.iter().map(|&t| Sign::of(t)).collect()
    }
}
