//! Sign votes, majority vote, and the private selection built on top of them.
//!
//! The server sees a `p × m` matrix of local sign votes, one column per
//! machine. Each row is summarised by its [`VoteCounts`]; everything the
//! mechanisms need (majority, stability, exponential-mechanism utilities) is a
//! function of those three counts.

mod budget;
mod dpvote;
mod peeling;

pub use budget::{PrivacyBudget, SignSelection};
pub use dpvote::{dpvote, dpvote_with, exp_mech_sign, exp_mech_sign_with, sign_probabilities};
pub use peeling::{peeling, peeling_with, NoiseScale};
pub(crate) use peeling::noisy_top_k;

use std::fmt;

use crate::error::{invalid, Result};

/// A vote in `{−1, 0, +1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(i8)]
pub enum Sign {
    Neg = -1,
    Zero = 0,
    Pos = 1,
}

impl Sign {
    /// Candidate order used by the exponential mechanism.
    pub const ALL: [Sign; 3] = [Sign::Pos, Sign::Zero, Sign::Neg];

    pub fn as_i8(self) -> i8 {
        self as i8
    }

    /// `sgn(x)`, with `sgn(0) = 0`.
    pub fn of(x: f64) -> Sign {
        if x > 0.0 {
            Sign::Pos
        } else if x < 0.0 {
            Sign::Neg
        } else {
            Sign::Zero
        }
    }

    pub fn is_zero(self) -> bool {
        self == Sign::Zero
    }
}

impl std::ops::Neg for Sign {
    type Output = Sign;

    fn neg(self) -> Sign {
        match self {
            Sign::Neg => Sign::Pos,
            Sign::Zero => Sign::Zero,
            Sign::Pos => Sign::Neg,
        }
    }
}

impl TryFrom<i8> for Sign {
    type Error = crate::Error;

    fn try_from(v: i8) -> Result<Sign> {
        match v {
            -1 => Ok(Sign::Neg),
            0 => Ok(Sign::Zero),
            1 => Ok(Sign::Pos),
            other => invalid(format!("vote {other} is not in {{-1, 0, 1}}")),
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_i8())
    }
}

/// Per-coordinate tallies of positive, negative and null votes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct VoteCounts {
    pub n_plus: usize,
    pub n_minus: usize,
    pub n_zero: usize,
}

impl VoteCounts {
    pub fn new(n_plus: usize, n_minus: usize, n_zero: usize) -> Self {
        VoteCounts { n_plus, n_minus, n_zero }
    }

    /// Number of machines.
    pub fn m(&self) -> usize {
        self.n_plus + self.n_minus + self.n_zero
    }

    fn signed(&self) -> (i64, i64, i64) {
        (self.n_plus as i64, self.n_minus as i64, self.n_zero as i64)
    }

    /// Strict majority: a sign wins only if it outnumbers all other votes combined.
    pub fn majority(&self) -> Sign {
        let (plus, minus, zero) = self.signed();
        if plus > zero + minus {
            Sign::Pos
        } else if minus > zero + plus {
            Sign::Neg
        } else {
            Sign::Zero
        }
    }

    /// Stability score used to rank coordinates during peeling. Positive when
    /// the majority is a sign, non-positive when it is null.
    pub fn stability(&self) -> i64 {
        let (plus, minus, zero) = self.signed();
        match self.majority() {
            Sign::Pos => plus - zero - minus,
            Sign::Neg => minus - zero - plus,
            Sign::Zero => -(plus + zero - minus).min(minus + zero - plus),
        }
    }

    /// Exponential-mechanism utility of reporting `candidate`.
    pub fn utility(&self, candidate: Sign) -> i64 {
        let (plus, minus, zero) = self.signed();
        match candidate {
            Sign::Pos => plus - zero - minus,
            Sign::Neg => minus - zero - plus,
            Sign::Zero => (plus + zero - minus).min(minus + zero - plus),
        }
    }

    fn record(&mut self, vote: Sign) {
        match vote {
            Sign::Pos => self.n_plus += 1,
            Sign::Neg => self.n_minus += 1,
            Sign::Zero => self.n_zero += 1,
        }
    }

    pub fn from_signs<'a>(votes: impl IntoIterator<Item = &'a Sign>) -> Self {
        let mut counts = VoteCounts::new(0, 0, 0);
        for &v in votes {
            counts.record(v);
        }
        counts
    }
}

/// Tally a raw row of votes. Rejects empty rows and values outside `{−1, 0, 1}`.
pub fn tally(row: &[i8]) -> Result<VoteCounts> {
    if row.is_empty() {
        return invalid("cannot tally an empty vote row");
    }
    let mut counts = VoteCounts::new(0, 0, 0);
    for &v in row {
        counts.record(Sign::try_from(v)?);
    }
    Ok(counts)
}

pub fn majority_vote(counts: VoteCounts) -> Sign {
    counts.majority()
}

pub fn stability(counts: VoteCounts) -> i64 {
    counts.stability()
}

pub fn utility(counts: VoteCounts, candidate: Sign) -> i64 {
    counts.utility(candidate)
}

/// The `p × m` matrix of local sign votes. Row `l` holds every machine's vote
/// on coordinate `l`; column `j` is machine `j`'s transmitted sign vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignMatrix {
    p: usize,
    m: usize,
    // row-major, p rows of length m
    entries: Vec<Sign>,
}

impl SignMatrix {
    pub fn from_columns(columns: &[Vec<Sign>]) -> Result<Self> {
        let m = columns.len();
        if m == 0 {
            return invalid("sign matrix needs at least one machine");
        }
        let p = columns[0].len();
        if p == 0 {
            return invalid("sign vectors must be non-empty");
        }
        if let Some((j, c)) = columns.iter().enumerate().find(|(_, c)| c.len() != p) {
            return invalid(format!("machine {j} sent {} signs, expected {p}", c.len()));
        }
        let mut entries = Vec::with_capacity(p * m);
        for l in 0..p {
            entries.extend(columns.iter().map(|c| c[l]));
        }
        Ok(SignMatrix { p, m, entries })
    }

    pub fn from_rows(rows: &[Vec<Sign>]) -> Result<Self> {
        let p = rows.len();
        if p == 0 {
            return invalid("sign matrix needs at least one coordinate");
        }
        let m = rows[0].len();
        if m == 0 {
            return invalid("sign matrix needs at least one machine");
        }
        if rows.iter().any(|r| r.len() != m) {
            return invalid("all rows of a sign matrix must have the same length");
        }
        Ok(SignMatrix { p, m, entries: rows.concat() })
    }

    /// Rows of raw `i8` votes; anything outside `{−1, 0, 1}` is rejected.
    pub fn from_i8_rows(rows: &[Vec<i8>]) -> Result<Self> {
        let rows = rows
            .iter()
            .map(|r| r.iter().map(|&v| Sign::try_from(v)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(&rows)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn row(&self, l: usize) -> &[Sign] {
        &self.entries[l * self.m..(l + 1) * self.m]
    }

    pub fn column(&self, j: usize) -> Vec<Sign> {
        (0..self.p).map(|l| self.entries[l * self.m + j]).collect()
    }

    pub fn get(&self, l: usize, j: usize) -> Sign {
        self.entries[l * self.m + j]
    }

    pub fn counts(&self, l: usize) -> VoteCounts {
        VoteCounts::from_signs(self.row(l))
    }

    pub fn all_counts(&self) -> Vec<VoteCounts> {
        (0..self.p).map(|l| self.counts(l)).collect()
    }

    /// Neighbouring matrix in which machine `j`'s whole contribution is replaced.
    pub fn with_column(&self, j: usize, column: &[Sign]) -> Result<Self> {
        if j >= self.m {
            return invalid(format!("machine {j} out of range (m = {})", self.m));
        }
        if column.len() != self.p {
            return invalid(format!("replacement column has {} signs, expected {}", column.len(), self.p));
        }
        let mut out = self.clone();
        for (l, &s) in column.iter().enumerate() {
            out.entries[l * self.m + j] = s;
        }
        Ok(out)
    }
}

/// Non-private aggregate: the per-row majority vote.
pub fn majority_vote_aggregate(matrix: &SignMatrix) -> Vec<Sign> {
    (0..matrix.p()).map(|l| matrix.counts(l).majority()).collect()
}
