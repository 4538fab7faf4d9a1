use thiserror::Error;

/// Errors produced by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input violates an operation's precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration file or flag could not be parsed or is inconsistent.
    #[error("config error: {0}")]
    Config(String),

    /// A numerical procedure failed to produce a trustworthy answer.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Monte-Carlo bisection could not bracket the detection threshold.
    #[error("bisection does not bracket 50% power: {message}")]
    NotBracketed {
        message: String,
        /// `(lambda_hz, power)` pairs evaluated before giving up.
        power_curve: Vec<(f64, f64)>,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
