//! Sign recovery for a sparse mean vector.
//!
//! Every machine thresholds its local sample mean at a shared level `λ_N` and
//! votes with the resulting sign vector.

use ndarray::{s, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{invalid, Result};
use crate::privrand::RandomStream;
use crate::vote::{dpvote_with, NoiseScale, PrivacyBudget, Sign, SignMatrix, SignSelection};

/// Observations split evenly across `m` machines, each an `n × p` block.
#[derive(Clone, Debug, PartialEq)]
pub struct ShardedDataset {
    shards: Vec<Array2<f64>>,
}

impl ShardedDataset {
    pub fn new(shards: Vec<Array2<f64>>) -> Result<Self> {
        let Some(first) = shards.first() else {
            return invalid("dataset needs at least one shard");
        };
        let shape = first.dim();
        if shape.0 == 0 || shape.1 == 0 {
            return invalid("shards must be non-empty");
        }
        if let Some(j) = shards.iter().position(|s| s.dim() != shape) {
            return invalid(format!("shard {j} has shape {:?}, expected {:?}", shards[j].dim(), shape));
        }
        Ok(ShardedDataset { shards })
    }

    /// Split `N` pooled rows into `m` consecutive blocks. `N` must be a multiple of `m`.
    pub fn from_pooled(data: ArrayView2<f64>, m: usize) -> Result<Self> {
        let total = data.nrows();
        if m == 0 || total % m != 0 {
            return invalid(format!("{total} observations do not split evenly over {m} machines"));
        }
        let n = total / m;
        let shards = (0..m).map(|j| data.slice(s![j * n..(j + 1) * n, ..]).to_owned()).collect();
        Self::new(shards)
    }

    pub fn m(&self) -> usize {
        self.shards.len()
    }

    pub fn n(&self) -> usize {
        self.shards[0].nrows()
    }

    pub fn p(&self) -> usize {
        self.shards[0].ncols()
    }

    pub fn shards(&self) -> &[Array2<f64>] {
        &self.shards
    }

    /// All rows in machine order.
    pub fn pooled(&self) -> Array2<f64> {
        let views: Vec<_> = self.shards.iter().map(|s| s.view()).collect();
        ndarray::concatenate(Axis(0), &views).expect("shards share a shape")
    }
}

/// `sgn(x)` if `|x| > λ`, else null.
pub fn quantize(x: f64, lambda: f64) -> Result<Sign> {
    if !x.is_finite() {
        return invalid(format!("cannot quantize non-finite value {x}"));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return invalid(format!("threshold must be finite and non-negative, got {lambda}"));
    }
    Ok(if x.abs() > lambda { Sign::of(x) } else { Sign::Zero })
}

pub fn quantize_vector(x: ArrayView1<f64>, lambda: f64) -> Result<Vec<Sign>> {
    x.iter().map(|&v| quantize(v, lambda)).collect()
}

/// Column means of one machine's block, thresholded at `lambda_n`.
pub fn local_mean_signs(shard: ArrayView2<f64>, lambda_n: f64) -> Result<Vec<Sign>> {
    if shard.nrows() == 0 || shard.ncols() == 0 {
        return invalid("cannot take the mean of an empty shard");
    }
    let mean = shard.mean_axis(Axis(0)).expect("non-empty");
    quantize_vector(mean.view(), lambda_n)
}

/// The server-side vote matrix: one thresholded mean per machine.
pub fn mean_sign_matrix(data: &ShardedDataset, lambda_n: f64) -> Result<SignMatrix> {
    let columns = data
        .shards()
        .iter()
        .map(|s| local_mean_signs(s.view(), lambda_n))
        .collect::<Result<Vec<_>>>()?;
    SignMatrix::from_columns(&columns)
}

pub fn dpvote_mean(
    data: &ShardedDataset,
    lambda_n: f64,
    budget: &PrivacyBudget,
    stream: &mut RandomStream,
) -> Result<SignSelection> {
    dpvote_mean_with(data, lambda_n, budget, NoiseScale::CALIBRATED, stream)
}

pub fn dpvote_mean_with(
    data: &ShardedDataset,
    lambda_n: f64,
    budget: &PrivacyBudget,
    noise: NoiseScale,
    stream: &mut RandomStream,
) -> Result<SignSelection> {
    let matrix = mean_sign_matrix(data, lambda_n)?;
    dpvote_with(&matrix, budget, noise, stream)
}
