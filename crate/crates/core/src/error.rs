use thiserror::Error;

/// Errors raised by the equilibrium engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// `kappa` and the per-type constructions have a 0/0 form at x = 1/2.
    #[error("singularity at type x = {x}: the denominator 1 - 2x vanishes")]
    Singularity { x: f64 },

    #[error("convergence failure: {0}")]
    Convergence(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("bracket error: {what} (f(lo) = {f_lo}, f(hi) = {f_hi})")]
    Bracket { what: String, f_lo: f64, f_hi: f64 },

    #[error("quadrature did not converge: estimate {estimate}, achieved error {achieved:e}, requested {requested:e}")]
    Quadrature {
        estimate: f64,
        achieved: f64,
        requested: f64,
    },

    #[error("invalid configuration at `{key}`: {message}")]
    Config { key: String, message: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
