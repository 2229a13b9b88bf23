use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("observation {value} is outside the support of the {model} model")]
    Domain { model: &'static str, value: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular system: {0}")]
    Singular(&'static str),

    #[error("infeasible confidence set: {0}")]
    Infeasible(String),

    #[error("payoff not representable: residual {residual:.3e} exceeds {tol:.1e}")]
    NotRepresentable { residual: f64, tol: f64 },

    #[error("payoff norm {norm:.4} exceeds the parameter bound {bound}")]
    NormExceedsBound { norm: f64, bound: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("kernel matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("round {round}: {source}")]
    Round {
        round: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("round {round} exceeded the wall-time budget of {budget_secs} s")]
    Timeout { round: usize, budget_secs: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}
