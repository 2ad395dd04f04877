//! Monte-Carlo check of the distributed-group privacy guarantee.
//!
//! Two sign matrices that differ in one machine's entire column are neighbours.
//! For each pair the mechanism runs `trials` times on both sides; for every
//! observed output `u` the audit tests
//! `P(u) ≤ e^ε·P′(u) + δ` in both directions, allowing three standard errors
//! of Monte-Carlo slack. A positive margin beyond the slack is a violation.

use std::collections::BTreeMap;

use crate::error::{invalid, Result};
use crate::privrand::RandomStream;
use crate::vote::{dpvote_with, NoiseScale, PrivacyBudget, Sign, SignMatrix};

/// Result of testing one output pattern in one direction.
#[derive(Clone, Debug, PartialEq)]
pub struct PatternCheck {
    pub pattern: Vec<Sign>,
    pub p_hat: f64,
    pub p_neighbor_hat: f64,
    /// `p_hat − e^ε·p_neighbor_hat − δ − 3σ`; positive means violated.
    pub margin: f64,
}

#[derive(Clone, Debug)]
pub struct PairReport {
    pub name: String,
    pub checks: Vec<PatternCheck>,
    pub max_margin: f64,
}

#[derive(Clone, Debug)]
pub struct AuditReport {
    pub budget: PrivacyBudget,
    pub trials: usize,
    pub pairs: Vec<PairReport>,
    pub max_margin: f64,
}

impl AuditReport {
    pub fn violated(&self) -> bool {
        self.max_margin > 0.0
    }

    pub fn worst(&self) -> Option<(&PairReport, &PatternCheck)> {
        self.pairs
            .iter()
            .flat_map(|p| p.checks.iter().map(move |c| (p, c)))
            .max_by(|a, b| a.1.margin.total_cmp(&b.1.margin))
    }
}

fn encode(signs: &[Sign]) -> u32 {
    signs.iter().fold(0, |acc, s| acc * 3 + (s.as_i8() + 1) as u32)
}

fn decode(mut code: u32, p: usize) -> Vec<Sign> {
    let mut out = vec![Sign::Zero; p];
    for slot in out.iter_mut().rev() {
        *slot = match code % 3 {
            0 => Sign::Neg,
            1 => Sign::Zero,
            _ => Sign::Pos,
        };
        code /= 3;
    }
    out
}

fn histogram(matrix: &SignMatrix, budget: &PrivacyBudget, trials: usize, noise: NoiseScale, stream: &mut RandomStream) -> Result<BTreeMap<u32, usize>> {
    let mut counts = BTreeMap::new();
    for _ in 0..trials {
        let out = dpvote_with(matrix, budget, noise, stream)?;
        *counts.entry(encode(out.signs())).or_insert(0) += 1;
    }
    Ok(counts)
}

fn one_direction(
    here: &BTreeMap<u32, usize>,
    there: &BTreeMap<u32, usize>,
    budget: &PrivacyBudget,
    trials: usize,
    p: usize,
) -> Vec<PatternCheck> {
    let t = trials as f64;
    let e_eps = budget.epsilon().exp();
    here.keys()
        .chain(there.keys())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .map(|&code| {
            let a = *here.get(&code).unwrap_or(&0) as f64 / t;
            let b = *there.get(&code).unwrap_or(&0) as f64 / t;
            let sigma = (a * (1.0 - a) / t + e_eps * e_eps * b * (1.0 - b) / t).sqrt();
            PatternCheck {
                pattern: decode(code, p),
                p_hat: a,
                p_neighbor_hat: b,
                margin: a - e_eps * b - budget.delta() - 3.0 * sigma,
            }
        })
        .collect()
}

/// Audit DPVote (at the given noise multiplier) on one neighbouring pair.
pub fn audit_pair(
    name: &str,
    matrix: &SignMatrix,
    neighbor: &SignMatrix,
    budget: &PrivacyBudget,
    trials: usize,
    noise: NoiseScale,
    stream: &RandomStream,
) -> Result<PairReport> {
    if (matrix.p(), matrix.m()) != (neighbor.p(), neighbor.m()) {
        return invalid("neighbouring matrices must have the same shape");
    }
    let differing = (0..matrix.m()).filter(|&j| matrix.column(j) != neighbor.column(j)).count();
    if differing > 1 {
        return invalid(format!("matrices differ in {differing} machines, neighbours differ in at most one"));
    }
    if trials == 0 {
        return invalid("audit needs at least one trial");
    }
    let left = histogram(matrix, budget, trials, noise, &mut stream.derive(0))?;
    let right = histogram(neighbor, budget, trials, noise, &mut stream.derive(1))?;
    let mut checks = one_direction(&left, &right, budget, trials, matrix.p());
    checks.extend(one_direction(&right, &left, budget, trials, matrix.p()));
    let max_margin = checks.iter().map(|c| c.margin).fold(f64::NEG_INFINITY, f64::max);
    Ok(PairReport { name: name.to_string(), checks, max_margin })
}

/// A pair sitting on majority boundaries: machine 0 votes `+1` everywhere in
/// the first matrix and `−1` everywhere in the neighbour, which moves every
/// row's stability by two and reorders the peeling ranking.
pub fn boundary_pair(p: usize, m: usize) -> Result<(SignMatrix, SignMatrix)> {
    if p == 0 || m < 2 {
        return invalid("boundary pair needs p >= 1 and m >= 2");
    }
    let others = m - 1;
    let half = others / 2 + others % 2;
    let rows: Vec<Vec<Sign>> = (0..p)
        .map(|l| {
            // votes of machines 1..m; machine 0 is set below
            let rest: Vec<Sign> = match l % 4 {
                // ties with the majority after machine 0 flips
                0 => (0..others).map(|j| if j < half { Sign::Pos } else { Sign::Zero }).collect(),
                1 => (0..others).map(|j| if j < others - half { Sign::Neg } else { Sign::Zero }).collect(),
                2 => (0..others).map(|j| if j < others - half { Sign::Pos } else { Sign::Zero }).collect(),
                _ => vec![Sign::Zero; others],
            };
            std::iter::once(Sign::Pos).chain(rest).collect()
        })
        .collect();
    let matrix = SignMatrix::from_rows(&rows)?;
    let neighbor = matrix.with_column(0, &vec![Sign::Neg; p])?;
    Ok((matrix, neighbor))
}

/// A unanimous matrix and the neighbour in which one machine dissents everywhere.
fn unanimous_pair(p: usize, m: usize) -> Result<(SignMatrix, SignMatrix)> {
    let matrix = SignMatrix::from_rows(&vec![vec![Sign::Pos; m]; p])?;
    let neighbor = matrix.with_column(0, &vec![Sign::Neg; p])?;
    Ok((matrix, neighbor))
}

fn check_bounds(p: usize, m: usize, budget: &PrivacyBudget, trials: usize) -> Result<()> {
    if p == 0 || p > 6 {
        return invalid(format!("audit needs 1 <= p <= 6 to enumerate outputs, got {p}"));
    }
    if !(2..=16).contains(&m) {
        return invalid(format!("audit needs 2 <= m <= 16, got {m}"));
    }
    if budget.s_tilde() > 3 || budget.s_tilde() > p {
        return invalid(format!("audit needs s_tilde <= min(3, p), got {}", budget.s_tilde()));
    }
    if trials == 0 {
        return invalid("audit needs at least one trial");
    }
    Ok(())
}

/// Audit calibrated DPVote on the constructed neighbouring pairs.
pub fn dp_audit(p: usize, m: usize, budget: &PrivacyBudget, trials: usize, stream: &RandomStream) -> Result<AuditReport> {
    dp_audit_with(p, m, budget, trials, NoiseScale::CALIBRATED, stream)
}

/// As [`dp_audit`], with the mechanism's noise multiplied by `noise`
/// (values below one are deliberately broken variants).
pub fn dp_audit_with(
    p: usize,
    m: usize,
    budget: &PrivacyBudget,
    trials: usize,
    noise: NoiseScale,
    stream: &RandomStream,
) -> Result<AuditReport> {
    check_bounds(p, m, budget, trials)?;
    let (a, a_prime) = boundary_pair(p, m)?;
    let (b, b_prime) = unanimous_pair(p, m)?;
    let pairs = vec![
        audit_pair("boundary", &a, &a_prime, budget, trials, noise, &stream.derive(0))?,
        audit_pair("unanimous", &b, &b_prime, budget, trials, noise, &stream.derive(1))?,
    ];
    let max_margin = pairs.iter().map(|p| p.max_margin).fold(f64::NEG_INFINITY, f64::max);
    Ok(AuditReport { budget: *budget, trials, pairs, max_margin })
}
