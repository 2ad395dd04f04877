//! Sign recovery for sparse linear regression.
//!
//! Each machine fits a Lasso on its shard with the smallest penalty
//! `λ_j ≥ λ_N` whose solution has at most `s̃` nonzeros, then votes with the
//! signs of the fitted coefficients.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{invalid, Error, Result};
use crate::privrand::RandomStream;
use crate::vote::{dpvote_with, NoiseScale, PrivacyBudget, Sign, SignMatrix, SignSelection};

/// One machine's design block and responses.
#[derive(Clone, Debug, PartialEq)]
pub struct RegressionShard {
    x: Array2<f64>,
    y: Array1<f64>,
}

impl RegressionShard {
    pub fn new(x: Array2<f64>, y: Array1<f64>) -> Result<Self> {
        if x.nrows() != y.len() {
            return invalid(format!("design has {} rows but response has {} entries", x.nrows(), y.len()));
        }
        if x.nrows() == 0 || x.ncols() == 0 {
            return invalid("regression shard must be non-empty");
        }
        Ok(RegressionShard { x, y })
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn y(&self) -> ArrayView1<'_, f64> {
        self.y.view()
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }
}

/// Solver and path settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LassoSettings {
    /// Stop when no coefficient moves by more than this in a full sweep.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Number of geometrically spaced penalties from `λ_max` down to `λ_N`.
    pub grid_len: usize,
    /// Coefficients at or below this magnitude count as zero.
    pub zero_threshold: f64,
}

impl Default for LassoSettings {
    fn default() -> Self {
        LassoSettings { tol: 1e-7, max_sweeps: 10_000, grid_len: 100, zero_threshold: 1e-10 }
    }
}

fn soft_threshold(z: f64, lambda: f64) -> f64 {
    if z > lambda {
        z - lambda
    } else if z < -lambda {
        z + lambda
    } else {
        0.0
    }
}

/// Sufficient statistics `XᵀX/n` and `Xᵀy/n` of a shard; fitting works on
/// these alone.
#[derive(Clone, Debug)]
pub struct LassoProblem {
    gram: Array2<f64>,
    xty: Array1<f64>,
}

impl LassoProblem {
    pub fn new(shard: &RegressionShard) -> Self {
        let n = shard.n() as f64;
        let gram = shard.x.t().dot(&shard.x) / n;
        let xty = shard.x.t().dot(&shard.y) / n;
        LassoProblem { gram, xty }
    }

    pub fn p(&self) -> usize {
        self.xty.len()
    }

    /// Smallest penalty at which the solution is identically zero.
    pub fn lambda_max(&self) -> f64 {
        self.xty.iter().fold(0.0, |acc: f64, v| acc.max(v.abs()))
    }

    /// Cyclic coordinate descent with soft-thresholding.
    pub fn fit(&self, lambda: f64, warm_start: Option<&[f64]>, settings: &LassoSettings) -> Result<Vec<f64>> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return invalid(format!("lasso penalty must be positive, got {lambda}"));
        }
        let p = self.p();
        let mut theta = match warm_start {
            Some(w) if w.len() != p => return invalid(format!("warm start has length {}, expected {p}", w.len())),
            Some(w) => w.to_vec(),
            None => vec![0.0; p],
        };
        // residual correlation  Xᵀ(y − Xθ)/n
        let mut corr = self.xty.clone();
        for (k, &t) in theta.iter().enumerate() {
            if t != 0.0 {
                corr.scaled_add(-t, &self.gram.column(k));
            }
        }
        let mut last_change = f64::INFINITY;
        for _ in 0..settings.max_sweeps {
            let mut max_change: f64 = 0.0;
            for k in 0..p {
                let g_kk = self.gram[(k, k)];
                let old = theta[k];
                let new = if g_kk > 0.0 { soft_threshold(corr[k] + g_kk * old, lambda) / g_kk } else { 0.0 };
                let delta = new - old;
                if delta != 0.0 {
                    theta[k] = new;
                    corr.scaled_add(-delta, &self.gram.column(k));
                    max_change = max_change.max(delta.abs());
                }
            }
            last_change = max_change;
            if max_change <= settings.tol {
                return Ok(theta);
            }
        }
        Err(Error::Convergence { sweeps: settings.max_sweeps, last_change, last_iterate: theta })
    }
}

/// Minimiser of `(1/2n)·|y − Xθ|² + λ·|θ|₁` by coordinate descent with the
/// default settings.
pub fn lasso_fit(shard: &RegressionShard, lambda: f64, warm_start: Option<&[f64]>) -> Result<Vec<f64>> {
    LassoProblem::new(shard).fit(lambda, warm_start, &LassoSettings::default())
}

/// `(1/2n)·|y − Xθ|² + λ·|θ|₁`
pub fn objective(shard: &RegressionShard, theta: &[f64], lambda: f64) -> f64 {
    let theta = ArrayView1::from(theta);
    let resid = &shard.y - &shard.x.dot(&theta);
    resid.dot(&resid) / (2.0 * shard.n() as f64) + lambda * theta.iter().map(|t| t.abs()).sum::<f64>()
}

/// Largest violation of the Lasso optimality conditions at `theta`:
/// `|g_l| ≤ λ` off the support and `g_l = λ·sgn(θ_l)` on it, where
/// `g = Xᵀ(y − Xθ)/n`.
pub fn kkt_violation(shard: &RegressionShard, theta: &[f64], lambda: f64) -> f64 {
    let view = ArrayView1::from(theta);
    let resid = &shard.y - &shard.x.dot(&view);
    let grad = shard.x.t().dot(&resid) / shard.n() as f64;
    grad.iter()
        .zip(theta)
        .map(|(&g, &t)| if t == 0.0 { (g.abs() - lambda).max(0.0) } else { (g - lambda * t.signum()).abs() })
        .fold(0.0, f64::max)
}

fn support_size(theta: &[f64], zero_threshold: f64) -> usize {
    theta.iter().filter(|t| t.abs() > zero_threshold).count()
}

/// Warm-started solutions along a decreasing penalty grid ending at `λ_N`.
#[derive(Clone, Debug)]
pub struct LassoPath {
    pub grid: Vec<f64>,
    pub solutions: Vec<Vec<f64>>,
    pub supports: Vec<usize>,
}

impl LassoPath {
    /// True when the support never shrinks as the penalty decreases.
    pub fn is_monotone(&self) -> bool {
        self.supports.windows(2).all(|w| w[0] <= w[1])
    }

    /// Index of the smallest grid penalty whose support is at most `s_tilde`.
    pub fn select(&self, s_tilde: usize) -> Option<usize> {
        (0..self.grid.len()).rev().find(|&i| self.supports[i] <= s_tilde)
    }
}

/// Geometric grid from `lambda_max` to `lambda_n`, with `lambda_n` as the exact last point.
pub fn penalty_grid(lambda_max: f64, lambda_n: f64, len: usize) -> Vec<f64> {
    if lambda_max <= lambda_n || len < 2 {
        return vec![lambda_n];
    }
    let ratio = (lambda_n / lambda_max).ln() / (len - 1) as f64;
    let mut grid: Vec<f64> = (0..len - 1).map(|k| lambda_max * (ratio * k as f64).exp()).collect();
    grid.push(lambda_n);
    grid
}

pub fn lasso_path(shard: &RegressionShard, lambda_n: f64, settings: &LassoSettings) -> Result<LassoPath> {
    if !(lambda_n > 0.0) || !lambda_n.is_finite() {
        return invalid(format!("lambda_N must be positive, got {lambda_n}"));
    }
    let problem = LassoProblem::new(shard);
    let grid = penalty_grid(problem.lambda_max(), lambda_n, settings.grid_len);
    let mut solutions = Vec::with_capacity(grid.len());
    let mut supports = Vec::with_capacity(grid.len());
    let mut warm: Option<Vec<f64>> = None;
    for &lambda in &grid {
        let theta = problem.fit(lambda, warm.as_deref(), settings)?;
        supports.push(support_size(&theta, settings.zero_threshold));
        warm = Some(theta.clone());
        solutions.push(theta);
    }
    Ok(LassoPath { grid, solutions, supports })
}

/// The per-machine penalty: the smallest grid value `λ ≥ λ_N` whose solution
/// has at most `s_tilde` nonzeros, with that solution.
pub fn select_lambda_j(shard: &RegressionShard, lambda_n: f64, s_tilde: usize) -> Result<(f64, Vec<f64>)> {
    select_lambda_j_with(shard, lambda_n, s_tilde, &LassoSettings::default())
}

pub fn select_lambda_j_with(
    shard: &RegressionShard,
    lambda_n: f64,
    s_tilde: usize,
    settings: &LassoSettings,
) -> Result<(f64, Vec<f64>)> {
    if s_tilde == 0 {
        return invalid("s_tilde must be at least 1");
    }
    let mut path = lasso_path(shard, lambda_n, settings)?;
    // the first grid point is lambda_max (all zero) or lambda_N itself with
    // lambda_N >= lambda_max, so some point always satisfies the cap
    let i = path.select(s_tilde).expect("the zero solution satisfies any cap");
    Ok((path.grid[i], path.solutions.swap_remove(i)))
}

/// Signs a machine sends: `sgn(θ̂_j(λ_j))`, with dust below the zero threshold treated as null.
pub fn local_lasso_signs(shard: &RegressionShard, lambda_n: f64, s_tilde: usize, settings: &LassoSettings) -> Result<Vec<Sign>> {
    let (_, theta) = select_lambda_j_with(shard, lambda_n, s_tilde, settings)?;
    Ok(theta.iter().map(|&t| if t.abs() > settings.zero_threshold { Sign::of(t) } else { Sign::Zero }).collect())
}

pub fn lasso_sign_matrix(shards: &[RegressionShard], lambda_n: f64, s_tilde: usize, settings: &LassoSettings) -> Result<SignMatrix> {
    if shards.is_empty() {
        return invalid("need at least one regression shard");
    }
    let columns = shards
        .iter()
        .map(|s| local_lasso_signs(s, lambda_n, s_tilde, settings))
        .collect::<Result<Vec<_>>>()?;
    SignMatrix::from_columns(&columns)
}

pub fn dpvote_lasso(
    shards: &[RegressionShard],
    lambda_n: f64,
    budget: &PrivacyBudget,
    stream: &mut RandomStream,
) -> Result<SignSelection> {
    dpvote_lasso_with(shards, lambda_n, budget, &LassoSettings::default(), NoiseScale::CALIBRATED, stream)
}

pub fn dpvote_lasso_with(
    shards: &[RegressionShard],
    lambda_n: f64,
    budget: &PrivacyBudget,
    settings: &LassoSettings,
    noise: NoiseScale,
    stream: &mut RandomStream,
) -> Result<SignSelection> {
    let matrix = lasso_sign_matrix(shards, lambda_n, budget.s_tilde(), settings)?;
    dpvote_with(&matrix, budget, noise, stream)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array};

    fn random_shard(n: usize, p: usize, seed: u64) -> RegressionShard {
        let mut s = RandomStream::new(seed);
        let x = Array::from_shape_fn((n, p), |_| s.standard_normal());
        let truth: Array1<f64> = Array::from_shape_fn(p, |l| if l < 2 { 1.0 - 2.0 * l as f64 } else { 0.0 });
        let y = x.dot(&truth) + Array::from_shape_fn(n, |_| 0.5 * s.standard_normal());
        RegressionShard::new(x, y).unwrap()
    }

    #[test]
    fn orthonormal_design_is_soft_thresholding() {
        // columns orthogonal with XᵀX/n = I for n = 4
        let x = array![[1.0, 1.0, 1.0], [1.0, -1.0, 1.0], [1.0, 1.0, -1.0], [1.0, -1.0, -1.0]];
        let y = array![2.0, 0.5, -1.0, 0.3];
        let shard = RegressionShard::new(x.clone(), y.clone()).unwrap();
        let xty = x.t().dot(&y) / 4.0;
        let lambda = 0.3;
        let theta = lasso_fit(&shard, lambda, None).unwrap();
        for (t, z) in theta.iter().zip(xty.iter()) {
            assert!((t - soft_threshold(*z, lambda)).abs() < 1e-12);
        }
    }

    #[test]
    fn null_boundary() {
        let shard = random_shard(30, 6, 1);
        let problem = LassoProblem::new(&shard);
        let theta = lasso_fit(&shard, problem.lambda_max(), None).unwrap();
        assert!(theta.iter().all(|&t| t == 0.0));
        let theta = lasso_fit(&shard, 2.0 * problem.lambda_max(), None).unwrap();
        assert!(theta.iter().all(|&t| t == 0.0));
        let theta = lasso_fit(&shard, 0.9 * problem.lambda_max(), None).unwrap();
        assert!(theta.iter().any(|&t| t != 0.0));
    }

    #[test]
    fn fits_pass_kkt() {
        for seed in 0..10 {
            let shard = random_shard(40, 8, seed);
            for lambda in [0.01, 0.1, 0.5] {
                let theta = lasso_fit(&shard, lambda, None).unwrap();
                assert!(kkt_violation(&shard, &theta, lambda) <= 1e-6);
            }
        }
    }

    #[test]
    fn warm_start_agrees() {
        let shard = random_shard(20, 10, 3);
        let cold = lasso_fit(&shard, 0.05, None).unwrap();
        let warm_from = lasso_fit(&shard, 0.2, None).unwrap();
        let warm = lasso_fit(&shard, 0.05, Some(&warm_from)).unwrap();
        assert!((objective(&shard, &cold, 0.05) - objective(&shard, &warm, 0.05)).abs() < 1e-8);
    }

    #[test]
    fn convergence_error_keeps_iterate() {
        let shard = random_shard(20, 10, 4);
        let settings = LassoSettings { max_sweeps: 1, tol: 0.0, ..LassoSettings::default() };
        match LassoProblem::new(&shard).fit(0.01, None, &settings) {
            Err(Error::Convergence { last_iterate, sweeps, .. }) => {
                assert_eq!(sweeps, 1);
                assert_eq!(last_iterate.len(), 10);
            }
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(RegressionShard::new(Array2::zeros((3, 2)), Array1::zeros(4)).is_err());
        let shard = random_shard(10, 3, 0);
        assert!(lasso_fit(&shard, 0.0, None).is_err());
        assert!(lasso_fit(&shard, 0.1, Some(&[0.0])).is_err());
        assert!(select_lambda_j(&shard, 0.0, 2).is_err());
    }

    #[test]
    fn grid_shape() {
        let g = penalty_grid(1.0, 0.01, 5);
        assert_eq!(g.len(), 5);
        assert_eq!(g[0], 1.0);
        assert_eq!(*g.last().unwrap(), 0.01);
        assert!(g.windows(2).all(|w| w[0] > w[1]));
        assert!((g[2] - 0.1).abs() < 1e-12);
        assert_eq!(penalty_grid(0.5, 1.0, 100), vec![1.0]);
    }

    #[test]
    fn loose_cap_returns_lambda_n() {
        let shard = random_shard(40, 6, 7);
        let (lambda, _) = select_lambda_j(&shard, 0.05, 6).unwrap();
        assert_eq!(lambda, 0.05);
        let (lambda, theta) = select_lambda_j(&shard, 0.05, 100).unwrap();
        assert_eq!(lambda, 0.05);
        assert!(kkt_violation(&shard, &theta, 0.05) <= 1e-6);
    }

    #[test]
    fn binding_cap_limits_support() {
        let shard = random_shard(40, 12, 9);
        let settings = LassoSettings::default();
        let path = lasso_path(&shard, 1e-3, &settings).unwrap();
        assert!(*path.supports.last().unwrap() > 2);
        let (lambda, theta) = select_lambda_j(&shard, 1e-3, 2).unwrap();
        assert!(support_size(&theta, settings.zero_threshold) <= 2);
        // every smaller grid penalty breaks the cap
        for (g, s) in path.grid.iter().zip(&path.supports) {
            if *g < lambda {
                assert!(*s > 2);
            }
        }
    }
}
