//! The guide's chapters compiled as doc-tests, so every snippet in `book/`
//! runs under `cargo test`.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/majority-vote.md")]
pub mod majority_vote {}
#[doc = include_str!("../../../book/src/private-selection.md")]
pub mod private_selection {}
#[doc = include_str!("../../../book/src/sparse-mean.md")]
pub mod sparse_mean {}
#[doc = include_str!("../../../book/src/lasso.md")]
pub mod lasso {}
#[doc = include_str!("../../../book/src/baseline.md")]
pub mod baseline {}
#[doc = include_str!("../../../book/src/random-streams.md")]
pub mod random_streams {}
#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
#[doc = include_str!("../../../book/src/privacy-audit.md")]
pub mod privacy_audit {}
