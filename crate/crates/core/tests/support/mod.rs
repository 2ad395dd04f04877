//! Reference implementations shared by the integration tests. Nothing here
//! calls into the solver or vote code it is used to check.
#![allow(dead_code)]

use std::collections::{HashSet, VecDeque};

use dpvote::lasso::RegressionShard;
use dpvote::sim::{Method, MetricRecord};
use dpvote::{RandomStream, VoteCounts};
use ndarray::{Array1, Array2};

/// Majority outcome of counts `(plus, zero, minus)` with the strict rule.
pub fn majority_of(plus: usize, zero: usize, minus: usize) -> i8 {
    if plus > zero + minus {
        1
    } else if minus > zero + plus {
        -1
    } else {
        0
    }
}

/// Fewest single-vote changes that move the majority outcome, by breadth-first
/// search over count vectors.
pub fn min_flips(counts: VoteCounts) -> usize {
    let start = (counts.n_plus, counts.n_zero, counts.n_minus);
    let target = majority_of(start.0, start.1, start.2);
    let mut seen = HashSet::from([start]);
    let mut queue = VecDeque::from([(start, 0usize)]);
    while let Some(((a, b, c), d)) = queue.pop_front() {
        if majority_of(a, b, c) != target {
            return d;
        }
        let v = [a, b, c];
        for from in 0..3 {
            if v[from] == 0 {
                continue;
            }
            for to in 0..3 {
                if to == from {
                    continue;
                }
                let mut w = v;
                w[from] -= 1;
                w[to] += 1;
                let next = (w[0], w[1], w[2]);
                if seen.insert(next) {
                    queue.push_back((next, d + 1));
                }
            }
        }
    }
    unreachable!("some flip always changes the outcome when m >= 1")
}

/// Every vote row of length `m` over {−1, 0, 1}.
pub fn all_rows(m: usize) -> impl Iterator<Item = Vec<i8>> {
    (0..3usize.pow(m as u32)).map(move |mut code| {
        (0..m)
            .map(|_| {
                let v = (code % 3) as i8 - 1;
                code /= 3;
                v
            })
            .collect()
    })
}

fn gram(shard: &RegressionShard) -> (Array2<f64>, Array1<f64>) {
    let n = shard.n() as f64;
    let x = shard.x();
    (x.t().dot(&x) / n, x.t().dot(&shard.y()) / n)
}

/// `(1/2n)‖y − Xθ‖² + λ‖θ‖₁`, evaluated from scratch.
pub fn lasso_objective(shard: &RegressionShard, theta: &[f64], lambda: f64) -> f64 {
    let x = shard.x();
    let y = shard.y();
    let mut rss = 0.0;
    for i in 0..shard.n() {
        let fit: f64 = (0..shard.p()).map(|l| x[(i, l)] * theta[l]).sum();
        rss += (y[i] - fit).powi(2);
    }
    rss / (2.0 * shard.n() as f64) + lambda * theta.iter().map(|t| t.abs()).sum::<f64>()
}

/// Lasso through the smooth split `θ = u − v`, `u, v ≥ 0`, solved by
/// accelerated projected gradient until the iterates stop moving.
pub fn lasso_split_oracle(shard: &RegressionShard, lambda: f64) -> Vec<f64> {
    let (g, c) = gram(shard);
    let p = shard.p();
    // Lipschitz constant of the split gradient is 2·‖G‖₂
    let mut v = Array1::from_elem(p, 1.0);
    let mut top = 0.0;
    for _ in 0..500 {
        let w = g.dot(&v);
        top = w.dot(&w).sqrt();
        v = w / top;
    }
    let step = 1.0 / (2.0 * top * 1.01);
    let mut u = vec![0.0; 2 * p];
    let mut prev = u.clone();
    let mut look = u.clone();
    let mut t = 1.0f64;
    for _ in 0..200_000 {
        let theta: Array1<f64> = (0..p).map(|l| look[l] - look[p + l]).collect();
        let grad = g.dot(&theta) - &c;
        let mut next = vec![0.0; 2 * p];
        for l in 0..p {
            next[l] = (look[l] - step * (grad[l] + lambda)).max(0.0);
            next[p + l] = (look[p + l] - step * (-grad[l] + lambda)).max(0.0);
        }
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let moved = next.iter().zip(&u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        for k in 0..2 * p {
            look[k] = next[k] + (t - 1.0) / t_next * (next[k] - u[k]);
        }
        prev.copy_from_slice(&u);
        u = next;
        t = t_next;
        if moved < 1e-15 {
            break;
        }
    }
    (0..p).map(|l| u[l] - u[p + l]).collect()
}

/// Random well-posed regression instance.
pub fn random_shard(n: usize, p: usize, stream: &mut RandomStream) -> RegressionShard {
    let x = Array2::from_shape_fn((n, p), |_| stream.standard_normal());
    let theta: Vec<f64> = (0..p).map(|l| if l % 2 == 0 { stream.standard_normal() } else { 0.0 }).collect();
    let y = Array1::from_shape_fn(n, |i| {
        (0..p).map(|l| x[(i, l)] * theta[l]).sum::<f64>() + 0.5 * stream.standard_normal()
    });
    RegressionShard::new(x, y).unwrap()
}

/// Mean and standard error of one metric for one method at one sweep point.
#[derive(Clone, Copy, Debug)]
pub struct Summary {
    pub mean: f64,
    pub se: f64,
}

pub fn summarize(records: &[MetricRecord], point: usize, method: Method, metric: fn(&MetricRecord) -> f64) -> Summary {
    let xs: Vec<f64> = records.iter().filter(|r| r.point == point && r.method == method).map(metric).collect();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    Summary { mean, se: (var / n).sqrt() }
}

/// `better` is at least as good as `worse` up to two standard errors of the difference.
pub fn dominates(better: Summary, worse: Summary, higher_is_better: bool) -> bool {
    let slack = 2.0 * (better.se.powi(2) + worse.se.powi(2)).sqrt();
    if higher_is_better {
        better.mean >= worse.mean - slack
    } else {
        better.mean <= worse.mean + slack
    }
}
