//! Distributed group differentially private sign selection by majority vote.
//!
//! Machines each hold a shard of the data and send a sign vector in
//! `{−1, 0, +1}^p` to a server. The server privately selects at most `s̃`
//! coordinates and their signs ([`vote::dpvote`]), so that replacing one
//! machine's entire shard changes the output distribution by at most `(ε, δ)`.
//!
//! * [`privrand`]: path-addressed reproducible randomness.
//! * [`vote`]: tallies, majority vote, peeling and the exponential-mechanism sign sampler.
//! * [`mean`]: sparse mean sign recovery from thresholded local means.
//! * [`lasso`]: sparse regression sign recovery from local Lasso fits.
//! * [`cwz`]: the single-machine noisy baseline used for comparison.
//! * [`sim`]: data generation, metrics, experiment runner and the privacy audit.

// `!(x > 0.0)` is how NaN gets rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cwz;
mod error;
pub mod lasso;
pub mod mean;
pub mod privrand;
pub mod sim;
pub mod vote;

pub use error::{Error, Result};
pub use privrand::RandomStream;
pub use vote::{dpvote, NoiseScale, PrivacyBudget, Sign, SignMatrix, SignSelection, VoteCounts};
