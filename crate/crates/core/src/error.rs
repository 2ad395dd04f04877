use thiserror::Error;

/// Errors raised by the selection mechanisms, solvers and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Coordinate descent ran out of sweeps. The last iterate is kept so callers
    /// can inspect how far it got.
    #[error("lasso did not converge after {sweeps} sweeps (last change {last_change:e})")]
    Convergence {
        sweeps: usize,
        last_change: f64,
        last_iterate: Vec<f64>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
