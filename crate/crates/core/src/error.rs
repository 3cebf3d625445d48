use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter is invalid for the requested operation.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A kernel cannot be built with uniform marginals for these inputs.
    #[error("infeasible kernel: {0}")]
    Infeasible(String),

    /// The budget lies outside the regime an operation covers.
    #[error("regime error: {0}")]
    Regime(String),

    /// A kernel evaluator failed.
    #[error("kernel error: {0}")]
    Kernel(String),

    /// Adaptive quadrature gave up before reaching its tolerance.
    #[error("quadrature did not converge on [{lo}, {hi}]: achieved error {achieved:e}, requested {requested:e}")]
    Numeric {
        lo: f64,
        hi: f64,
        achieved: f64,
        requested: f64,
    },

    #[error("malformed grid file: {0}")]
    GridFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
