use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{invalid, Result};
use crate::lasso::RegressionShard;
use crate::mean::ShardedDataset;
use crate::privrand::RandomStream;

use super::TruthSpec;

/// Shape and noise of a simulated distributed dataset.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DataSpec {
    pub m: usize,
    pub n: usize,
    /// Toeplitz decay `ρ` of the covariance `Σ_ij = ρ^|i−j|`.
    pub decay: f64,
    /// Multiplier on the additive noise; `0` gives noiseless data.
    pub noise_scale: f64,
}

impl DataSpec {
    pub fn new(m: usize, n: usize, decay: f64) -> Self {
        DataSpec { m, n, decay, noise_scale: 1.0 }
    }

    /// Split `total` observations over `m` machines; rejects uneven splits.
    pub fn from_total(total: usize, m: usize, decay: f64) -> Result<Self> {
        if m == 0 || total % m != 0 {
            return invalid(format!("{total} observations do not split evenly over {m} machines"));
        }
        Ok(Self::new(m, total / m, decay))
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return invalid("m and n must be positive");
        }
        check_decay(self.decay)?;
        if !(self.noise_scale >= 0.0) || !self.noise_scale.is_finite() {
            return invalid(format!("noise scale must be non-negative, got {}", self.noise_scale));
        }
        Ok(())
    }
}

// decay = 0 is the independent limit and is allowed
fn check_decay(decay: f64) -> Result<()> {
    if !(0.0..1.0).contains(&decay) {
        return invalid(format!("Toeplitz decay must lie in [0, 1), got {decay}"));
    }
    Ok(())
}

/// Fill `out` with one draw from `N(0, Σ)`, `Σ_ij = decay^|i−j|`, by the AR(1) recursion.
fn fill_ar1(out: &mut [f64], decay: f64, innovation: f64, stream: &mut RandomStream) {
    let mut prev = stream.standard_normal();
    out[0] = prev;
    for v in out.iter_mut().skip(1) {
        prev = decay * prev + innovation * stream.standard_normal();
        *v = prev;
    }
}

/// `count` independent rows from `N(0, Σ)` with `Σ_ij = decay^|i−j|`.
pub fn gen_toeplitz_gaussian(dim: usize, decay: f64, count: usize, stream: &mut RandomStream) -> Result<Array2<f64>> {
    if dim == 0 {
        return invalid("dimension must be at least 1");
    }
    check_decay(decay)?;
    let innovation = (1.0 - decay * decay).sqrt();
    let mut out = Array2::zeros((count, dim));
    for mut row in out.rows_mut() {
        fill_ar1(row.as_slice_mut().expect("standard layout"), decay, innovation, stream);
    }
    Ok(out)
}

/// One machine's block of `X_i = θ* + z_i`, `z_i ~ N(0, Σ)`.
pub fn gen_mean_shard(truth: &TruthSpec, spec: &DataSpec, stream: &mut RandomStream) -> Result<Array2<f64>> {
    spec.validate()?;
    let mut block = gen_toeplitz_gaussian(truth.p(), spec.decay, spec.n, stream)?;
    let theta = ArrayView1::from(truth.theta());
    block.mapv_inplace(|z| z * spec.noise_scale);
    block += &theta;
    Ok(block)
}

/// Machine `j` draws from `stream.derive(j)`, so shards can be regenerated
/// independently and in any order.
pub fn gen_mean_data(truth: &TruthSpec, spec: &DataSpec, stream: &RandomStream) -> Result<ShardedDataset> {
    let shards = (0..spec.m)
        .map(|j| gen_mean_shard(truth, spec, &mut stream.derive(j as u64)))
        .collect::<Result<Vec<_>>>()?;
    ShardedDataset::new(shards)
}

/// One machine's `(X, y)` with Toeplitz-Gaussian covariates and `y = Xθ* + z`, `z ~ N(0, 1)`.
pub fn gen_regression_shard(truth: &TruthSpec, spec: &DataSpec, stream: &mut RandomStream) -> Result<RegressionShard> {
    spec.validate()?;
    let x = gen_toeplitz_gaussian(truth.p(), spec.decay, spec.n, stream)?;
    let theta = ArrayView1::from(truth.theta());
    let noise = Array1::from_shape_fn(spec.n, |_| stream.standard_normal() * spec.noise_scale);
    let y = x.dot(&theta) + noise;
    RegressionShard::new(x, y)
}

pub fn gen_regression_data(truth: &TruthSpec, spec: &DataSpec, stream: &RandomStream) -> Result<Vec<RegressionShard>> {
    (0..spec.m)
        .map(|j| gen_regression_shard(truth, spec, &mut stream.derive(j as u64)))
        .collect()
}
