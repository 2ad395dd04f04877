//! Single-machine noisy baseline in the style of Cai, Wang and Zhang.
//!
//! All `N = m·n` observations are pooled. Mean: clip every coordinate to
//! `[−R, R]`, average, then pick `s̃` coordinates by noisy peeling on the
//! absolute means and report the signs of freshly noised values. Regression:
//! `T` rounds of noisy iterative hard thresholding on the least-squares loss
//! with per-sample gradient coordinates clipped to `[−R, R]`.
//!
//! The per-sample noise scales are multiplied by the local sample size `n`, so
//! that replacing one machine's whole shard (not one row) is covered by group
//! privacy.

use ndarray::{Array1, ArrayView2, Axis};

use crate::error::{invalid, Result};
use crate::lasso::RegressionShard;
use crate::mean::ShardedDataset;
use crate::privrand::RandomStream;
use crate::vote::{noisy_top_k, NoiseScale, PrivacyBudget, Sign, SignSelection};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CwzConfig {
    /// Truncation level `R`.
    pub truncation: f64,
    /// Gradient steps `T` (regression only).
    pub steps: usize,
    /// Step size `η` (regression only).
    pub step_size: f64,
    pub budget: PrivacyBudget,
    /// Multiplier on the sensitivity constant of the noise scale.
    pub scale_factor: f64,
    pub noise: NoiseScale,
}

impl CwzConfig {
    /// `R = 2`, `T = 20`, `η = 0.1`.
    pub fn new(budget: PrivacyBudget) -> Self {
        CwzConfig {
            truncation: 2.0,
            steps: 20,
            step_size: 0.1,
            budget,
            scale_factor: 1.0,
            noise: NoiseScale::CALIBRATED,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.truncation > 0.0) || !self.truncation.is_finite() {
            return invalid(format!("truncation R must be positive, got {}", self.truncation));
        }
        if self.steps == 0 {
            return invalid("number of steps T must be at least 1");
        }
        if !(self.step_size > 0.0) || !self.step_size.is_finite() {
            return invalid(format!("step size must be positive, got {}", self.step_size));
        }
        if !(self.scale_factor > 0.0) || !self.scale_factor.is_finite() {
            return invalid(format!("scale factor must be positive, got {}", self.scale_factor));
        }
        self.noise.validate()
    }

    /// Laplace scale protecting a single observation out of `total` in the
    /// mean estimator: `2R·sqrt(3·s̃·ln(1/δ)) / (N·ε)`.
    pub fn mean_sample_scale(&self, total: usize) -> f64 {
        let b = &self.budget;
        self.scale_factor * 2.0 * self.truncation * (3.0 * b.s_tilde() as f64 * (1.0 / b.delta()).ln()).sqrt()
            / (total as f64 * b.epsilon())
    }

    /// Mean scale inflated to a whole machine of `n` observations.
    pub fn mean_noise_scale(&self, n: usize, total: usize) -> f64 {
        n as f64 * self.mean_sample_scale(total)
    }

    /// Per-round single-observation scale of the regression iterates; each
    /// round spends `(ε/T, δ/T)`:
    /// `η·2R·sqrt(3·s̃·ln(T/δ))·T / (N·ε)`.
    pub fn regression_sample_scale(&self, total: usize) -> f64 {
        let b = &self.budget;
        let t = self.steps as f64;
        self.scale_factor * self.step_size * 2.0 * self.truncation * (3.0 * b.s_tilde() as f64 * (t / b.delta()).ln()).sqrt() * t
            / (total as f64 * b.epsilon())
    }

    pub fn regression_noise_scale(&self, n: usize, total: usize) -> f64 {
        n as f64 * self.regression_sample_scale(total)
    }
}

/// Noisy hard thresholding: peel `s̃` coordinates on `|values|`, then release
/// the selected values with fresh noise.
fn noisy_hard_threshold(values: &[f64], s_tilde: usize, scale: f64, stream: &mut RandomStream) -> Result<(Vec<usize>, Vec<f64>)> {
    let magnitudes: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    let chosen = noisy_top_k(&magnitudes, s_tilde, scale, stream)?;
    let mut out = vec![0.0; values.len()];
    for &l in &chosen {
        let noise = if scale > 0.0 { stream.sample_laplace(scale)? } else { 0.0 };
        out[l] = values[l] + noise;
    }
    Ok((chosen, out))
}

fn selection_from_values(chosen: Vec<usize>, values: &[f64]) -> SignSelection {
    SignSelection::new(chosen, values.iter().map(|&v| Sign::of(v)).collect())
}

/// Running sums of clipped observations, so shards can be streamed.
#[derive(Clone, Debug)]
pub struct ClippedMeanAccumulator {
    truncation: f64,
    sums: Array1<f64>,
    rows: usize,
}

impl ClippedMeanAccumulator {
    pub fn new(p: usize, truncation: f64) -> Self {
        ClippedMeanAccumulator { truncation, sums: Array1::zeros(p), rows: 0 }
    }

    pub fn add(&mut self, block: ArrayView2<f64>) {
        let r = self.truncation;
        for row in block.axis_iter(Axis(0)) {
            self.sums.zip_mut_with(&row, |s, &x| *s += x.clamp(-r, r));
        }
        self.rows += block.nrows();
    }

    pub fn mean(&self) -> Array1<f64> {
        &self.sums / self.rows.max(1) as f64
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
}

/// Mean baseline from already-accumulated clipped sums; `n` is the local
/// sample size used for the noise inflation.
pub fn cwz_mean_from(acc: &ClippedMeanAccumulator, n: usize, cfg: &CwzConfig, stream: &mut RandomStream) -> Result<SignSelection> {
    cfg.validate()?;
    if acc.rows() == 0 {
        return invalid("no observations accumulated");
    }
    let mean = acc.mean();
    if cfg.budget.s_tilde() > mean.len() {
        return invalid(format!("s_tilde = {} exceeds p = {}", cfg.budget.s_tilde(), mean.len()));
    }
    let scale = cfg.mean_noise_scale(n, acc.rows()) * cfg.noise.0;
    let (chosen, values) = noisy_hard_threshold(mean.as_slice().expect("contiguous"), cfg.budget.s_tilde(), scale, stream)?;
    Ok(selection_from_values(chosen, &values))
}

pub fn cwz_mean(data: &ShardedDataset, cfg: &CwzConfig, stream: &mut RandomStream) -> Result<SignSelection> {
    let mut acc = ClippedMeanAccumulator::new(data.p(), cfg.truncation);
    for shard in data.shards() {
        acc.add(shard.view());
    }
    cwz_mean_from(&acc, data.n(), cfg, stream)
}

/// Something that can replay every regression shard, in machine order, as
/// many times as asked.
pub trait ShardSource {
    fn machines(&self) -> usize;
    fn n(&self) -> usize;
    fn p(&self) -> usize;
    fn for_each(&self, visit: &mut dyn FnMut(&RegressionShard) -> Result<()>) -> Result<()>;
}

impl ShardSource for [RegressionShard] {
    fn machines(&self) -> usize {
        self.len()
    }

    fn n(&self) -> usize {
        self.first().map_or(0, |s| s.n())
    }

    fn p(&self) -> usize {
        self.first().map_or(0, |s| s.p())
    }

    fn for_each(&self, visit: &mut dyn FnMut(&RegressionShard) -> Result<()>) -> Result<()> {
        self.iter().try_for_each(visit)
    }
}

/// Clipped least-squares gradient `(1/N)·Σ clip_R((x_iᵀθ − y_i)·x_i)`.
fn clipped_gradient<S: ShardSource + ?Sized>(source: &S, theta: &Array1<f64>, r: f64) -> Result<Array1<f64>> {
    let mut grad = Array1::zeros(theta.len());
    let mut rows = 0usize;
    source.for_each(&mut |shard| {
        let fitted = shard.x().dot(theta);
        for ((row, &fit), &y) in shard.x().axis_iter(Axis(0)).zip(fitted.iter()).zip(shard.y().iter()) {
            let resid = fit - y;
            grad.zip_mut_with(&row, |g, &x| *g += (resid * x).clamp(-r, r));
        }
        rows += shard.n();
        Ok(())
    })?;
    Ok(grad / rows.max(1) as f64)
}

pub fn cwz_regression<S: ShardSource + ?Sized>(source: &S, cfg: &CwzConfig, stream: &mut RandomStream) -> Result<SignSelection> {
    cfg.validate()?;
    let (m, n, p) = (source.machines(), source.n(), source.p());
    if m == 0 || n == 0 {
        return invalid("need at least one non-empty regression shard");
    }
    let s_tilde = cfg.budget.s_tilde();
    if s_tilde > p {
        return invalid(format!("s_tilde = {s_tilde} exceeds p = {p}"));
    }
    let scale = cfg.regression_noise_scale(n, m * n) * cfg.noise.0;
    let mut theta = Array1::<f64>::zeros(p);
    let mut chosen = Vec::new();
    for _ in 0..cfg.steps {
        let grad = clipped_gradient(source, &theta, cfg.truncation)?;
        let half = &theta - &(grad * cfg.step_size);
        let (sel, values) = noisy_hard_threshold(half.as_slice().expect("contiguous"), s_tilde, scale, stream)?;
        chosen = sel;
        theta = Array1::from(values);
    }
    Ok(selection_from_values(chosen, theta.as_slice().expect("contiguous")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use Sign::*;

    fn cfg(s: usize) -> CwzConfig {
        CwzConfig::new(PrivacyBudget::new(0.5, 0.05, s).unwrap())
    }

    #[test]
    fn clamp_leaves_small_values_alone() {
        let block = array![[0.5, -1.9, 2.0], [-0.5, 1.0, -2.0]];
        let mut acc = ClippedMeanAccumulator::new(3, 2.0);
        acc.add(block.view());
        assert_eq!(acc.mean(), block.mean_axis(Axis(0)).unwrap());
    }

    #[test]
    fn clamp_saturates_large_values() {
        let block = array![[5.0, -7.0], [3.0, -2.5]];
        let mut acc = ClippedMeanAccumulator::new(2, 2.0);
        acc.add(block.view());
        assert_eq!(acc.mean(), array![2.0, -2.0]);
    }

    #[test]
    fn noiseless_mean_picks_top_magnitudes() {
        let shard = array![[0.9, -0.05, -0.6, 0.1, 0.0], [1.1, 0.05, -0.4, 0.2, 0.0]];
        let data = ShardedDataset::new(vec![shard.clone(), shard]).unwrap();
        let mut c = cfg(3);
        c.noise = NoiseScale::NOISELESS;
        let out = cwz_mean(&data, &c, &mut RandomStream::new(0)).unwrap();
        assert_eq!(out.candidates(), &[0, 2, 3]);
        assert_eq!(out.signs(), &[Pos, Zero, Neg, Pos, Zero]);
    }

    #[test]
    fn noise_is_inflated_by_local_sample_size() {
        let c = cfg(15);
        let single = c.mean_sample_scale(160_000);
        assert_eq!(c.mean_noise_scale(200, 160_000), 200.0 * single);
        let expected = 2.0 * 2.0 * (45.0 * 20f64.ln()).sqrt() / (160_000.0 * 0.5);
        assert!((single - expected).abs() < 1e-15);
        assert_eq!(c.regression_noise_scale(500, 400_000), 500.0 * c.regression_sample_scale(400_000));
    }

    #[test]
    fn rejects_bad_config() {
        let mut c = cfg(2);
        c.steps = 0;
        assert!(c.validate().is_err());
        let mut c = cfg(2);
        c.truncation = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn noiseless_orthonormal_regression_recovers_ls_signs() {
        // XᵀX/N = I with N = 4
        let x = array![[1.0, 1.0, 1.0, 1.0], [1.0, -1.0, 1.0, -1.0], [1.0, 1.0, -1.0, -1.0], [1.0, -1.0, -1.0, 1.0]];
        let y = array![0.2, 1.4, -0.6, 1.0];
        let b = x.t().dot(&y) / 4.0; // least-squares solution
        let shard = RegressionShard::new(x, y).unwrap();
        let mut c = cfg(2);
        c.noise = NoiseScale::NOISELESS;
        c.steps = 300;
        c.truncation = 100.0;
        let out = cwz_regression(&[shard][..], &c, &mut RandomStream::new(0)).unwrap();
        let mut order: Vec<usize> = (0..4).collect();
        order.sort_by(|&i, &j| b[j].abs().partial_cmp(&b[i].abs()).unwrap());
        let mut expected = [Zero; 4];
        for &l in &order[..2] {
            expected[l] = Sign::of(b[l]);
        }
        assert_eq!(out.signs(), &expected[..]);
    }

    #[test]
    fn regression_is_deterministic() {
        let mut s = RandomStream::new(5);
        let x = Array2::from_shape_fn((50, 6), |_| s.standard_normal());
        let y = x.column(0).to_owned() - x.column(3).to_owned();
        let shards = [RegressionShard::new(x, y).unwrap()];
        let c = cfg(2);
        let a = cwz_regression(&shards[..], &c, &mut RandomStream::new(1)).unwrap();
        let b = cwz_regression(&shards[..], &c, &mut RandomStream::new(1)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.candidates().len(), 2);
    }
}
