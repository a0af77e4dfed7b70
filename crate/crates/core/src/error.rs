use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{0} prior draws all fell outside the model support")]
    SupportExhausted(usize),
    #[error("gradient of the log-likelihood is not finite at {0}")]
    NonFiniteGradient(f64),
    #[error("{0} is outside the model support")]
    OutOfSupport(f64),
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("invalid prior: {0}")]
    InvalidPrior(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("no convergence after {iterations} iterations (gradient norm {grad_norm:e})")]
    NoConvergence { iterations: usize, grad_norm: f64 },
    #[error("no conjugate posterior for model `{model}` with prior `{prior}`")]
    NoConjugateForm { model: String, prior: String },
    #[error("ball {ball_id}: {source}")]
    Ball {
        ball_id: usize,
        #[source]
        source: Box<Error>,
    },
}
