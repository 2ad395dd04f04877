//! Seedable, path-addressed randomness.
//!
//! A [`RandomStream`] is identified by a 64-bit seed and a path of 64-bit
//! labels (replication id, machine id, mechanism stage, ...). The path is
//! hashed into a ChaCha8 key, so every substream is a pure function of
//! `(seed, path)` and can be derived in any order on any worker. Within a
//! stream, draws are a pure function of the call index.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn derive_key(seed: u64, path: &[u64]) -> [u8; 32] {
    let mut h = splitmix64(seed);
    for (depth, &label) in path.iter().enumerate() {
        h = splitmix64(h ^ splitmix64(label ^ (depth as u64).wrapping_mul(GOLDEN)));
    }
    let mut key = [0u8; 32];
    let mut state = h;
    for chunk in key.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    key
}

/// A reproducible random substream.
#[derive(Clone, Debug)]
pub struct RandomStream {
    seed: u64,
    path: Vec<u64>,
    rng: ChaCha8Rng,
}

impl RandomStream {
    /// Root stream for `seed` (empty path).
    pub fn new(seed: u64) -> Self {
        Self::at(seed, Vec::new())
    }

    /// Stream addressed by an explicit path.
    pub fn at(seed: u64, path: Vec<u64>) -> Self {
        let rng = ChaCha8Rng::from_seed(derive_key(seed, &path));
        RandomStream { seed, path, rng }
    }

    /// Child stream with `label` appended to the path. Independent of how many
    /// draws the parent has already made.
    pub fn derive(&self, label: u64) -> Self {
        let mut path = self.path.clone();
        path.push(label);
        Self::at(self.seed, path)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path(&self) -> &[u64] {
        &self.path
    }

    /// Uniform draw on the open interval (0, 1).
    pub fn uniform_open(&mut self) -> f64 {
        loop {
            let u: f64 = self.rng.gen();
            if u > 0.0 {
                return u;
            }
        }
    }

    /// One draw from Lap(0, `scale`) by inverse CDF.
    pub fn sample_laplace(&mut self, scale: f64) -> Result<f64> {
        if !(scale > 0.0) || !scale.is_finite() {
            return invalid(format!("laplace scale must be positive and finite, got {scale}"));
        }
        let u = self.uniform_open();
        Ok(laplace_from_uniform(u, scale))
    }

    /// Index `i` with probability `weights[i] / sum(weights)`.
    pub fn sample_categorical(&mut self, weights: &[f64]) -> Result<usize> {
        if weights.is_empty() {
            return invalid("categorical weights are empty");
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return invalid(format!("categorical weights must be finite and non-negative, got {w}"));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return invalid("categorical weights must have a positive finite sum");
        }
        let target = self.rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut last_positive = 0;
        for (i, &w) in weights.iter().enumerate() {
            if w > 0.0 {
                acc += w;
                last_positive = i;
                if target < acc {
                    return Ok(i);
                }
            }
        }
        // rounding in the running sum
        Ok(last_positive)
    }

    /// `dim` independent standard normal draws.
    pub fn sample_gaussian_vector(&mut self, dim: usize) -> Result<Vec<f64>> {
        if dim == 0 {
            return invalid("gaussian vector dimension must be at least 1");
        }
        Ok((0..dim).map(|_| self.standard_normal()).collect())
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}

/// Inverse-CDF map from a uniform `u` in (0, 1) to Lap(0, `scale`).
pub fn laplace_from_uniform(u: f64, scale: f64) -> f64 {
    let centered = u - 0.5;
    -scale * centered.signum() * (1.0 - 2.0 * centered.abs()).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn laplace_median_is_zero() {
        assert_eq!(laplace_from_uniform(0.5, 3.0), 0.0);
        assert!(laplace_from_uniform(0.75, 1.0) > 0.0);
        assert!(laplace_from_uniform(0.25, 1.0) < 0.0);
        assert_eq!(laplace_from_uniform(0.75, 1.0), -laplace_from_uniform(0.25, 1.0));
    }

    #[test]
    fn laplace_rejects_bad_scale() {
        let mut s = RandomStream::new(1);
        assert!(s.sample_laplace(0.0).is_err());
        assert!(s.sample_laplace(-1.0).is_err());
        assert!(s.sample_laplace(f64::NAN).is_err());
    }

    #[test]
    fn laplace_moments() {
        let mut s = RandomStream::new(7).derive(1);
        let xs: Vec<f64> = (0..1_000_000).map(|_| s.sample_laplace(2.0).unwrap()).collect();
        let (mean, var) = mean_var(&xs);
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 8.0).abs() < 0.4, "var {var}");
    }

    #[test]
    fn laplace_tail_matches_exponential() {
        let b = 1.5;
        let n = 100_000;
        let mut s = RandomStream::new(11);
        let xs: Vec<f64> = (0..n).map(|_| s.sample_laplace(b).unwrap()).collect();
        for t in [0.5, 1.0, 3.0, 6.0] {
            let p = (-t / b).exp();
            let hits = xs.iter().filter(|x| x.abs() > t).count() as f64;
            let sd = (n as f64 * p * (1.0 - p)).sqrt();
            assert!((hits - n as f64 * p).abs() <= 3.0 * sd, "t={t} hits={hits}");
        }
    }

    #[test]
    fn categorical_degenerate_and_errors() {
        let mut s = RandomStream::new(3);
        for _ in 0..1000 {
            assert_eq!(s.sample_categorical(&[1.0, 0.0, 0.0]).unwrap(), 0);
            assert_eq!(s.sample_categorical(&[0.0, 0.0, 2.0]).unwrap(), 2);
        }
        assert!(s.sample_categorical(&[0.0, 0.0]).is_err());
        assert!(s.sample_categorical(&[]).is_err());
        assert!(s.sample_categorical(&[1.0, f64::INFINITY]).is_err());
        assert!(s.sample_categorical(&[1.0, f64::NAN]).is_err());
        assert!(s.sample_categorical(&[1.0, -0.5]).is_err());
    }

    #[test]
    fn categorical_fair_coin() {
        let mut s = RandomStream::new(5);
        let n = 10_000;
        let zeros = (0..n).filter(|_| s.sample_categorical(&[1.0, 1.0]).unwrap() == 0).count();
        let sd = (n as f64 * 0.25).sqrt();
        assert!((zeros as f64 - n as f64 / 2.0).abs() <= 3.0 * sd);
    }

    #[test]
    fn categorical_three_point() {
        let e = std::f64::consts::E;
        let expected = [e / (e + 2.0), 1.0 / (e + 2.0), 1.0 / (e + 2.0)];
        let mut s = RandomStream::new(9);
        let n = 10_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[s.sample_categorical(&[e, 1.0, 1.0]).unwrap()] += 1;
        }
        for (c, p) in counts.iter().zip(expected) {
            let sd = (n as f64 * p * (1.0 - p)).sqrt();
            assert!((*c as f64 - n as f64 * p).abs() <= 3.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn gaussian_moments() {
        let mut s = RandomStream::new(13);
        let xs: Vec<f64> = (0..1_000_000).map(|_| s.sample_gaussian_vector(1).unwrap()[0]).collect();
        let (mean, var) = mean_var(&xs);
        assert!(mean.abs() < 0.01);
        assert!((var - 1.0).abs() < 0.02);
        assert!(s.sample_gaussian_vector(0).is_err());
    }

    #[test]
    fn same_path_same_draws() {
        let a = RandomStream::at(42, vec![1, 2, 3]).sample_gaussian_vector(3).unwrap();
        let b = RandomStream::at(42, vec![1, 2, 3]).sample_gaussian_vector(3).unwrap();
        assert_eq!(a, b);
        let c = RandomStream::new(42).derive(1).derive(2).derive(3).sample_gaussian_vector(3).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn derive_ignores_parent_position() {
        let mut parent = RandomStream::new(1);
        let before = parent.derive(9).next_u64();
        parent.next_u64();
        assert_eq!(parent.derive(9).next_u64(), before);
    }

    #[test]
    fn distinct_paths_uncorrelated() {
        let n = 10_000;
        let mut a = RandomStream::at(99, vec![0, 1]);
        let mut b = RandomStream::at(99, vec![0, 2]);
        let xs = a.sample_gaussian_vector(n).unwrap();
        let ys = b.sample_gaussian_vector(n).unwrap();
        let (mx, vx) = mean_var(&xs);
        let (my, vy) = mean_var(&ys);
        let cov = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / (n as f64 - 1.0);
        let r = cov / (vx * vy).sqrt();
        // sd of r under independence is about 1/sqrt(n)
        assert!(r.abs() <= 3.0 / (n as f64).sqrt(), "r = {r}");
    }

    #[test]
    fn paths_of_different_length_differ() {
        let a = RandomStream::at(5, vec![]).next_u64();
        let b = RandomStream::at(5, vec![0]).next_u64();
        let c = RandomStream::at(5, vec![0, 0]).next_u64();
        assert!(a != b && b != c && a != c);
    }
}
