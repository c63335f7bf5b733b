use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("strategy fault: {0}")]
    StrategyFault(String),

    #[error("step cap of {cap} exceeded at position {position:?}")]
    StepCapExceeded { cap: u64, position: Vec<f64> },

    #[error("no convergence after {sweeps} sweeps, last sup-norm change {residual:e}")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("run {run}: {source}")]
    Run {
        run: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
