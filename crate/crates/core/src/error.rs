use thiserror::Error;

/// Errors produced by the strategy, pricing and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KellyError {
    /// Market or strategy parameters violate a model invariant.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// An argument lies outside the domain where the formula is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A portfolio admits a non-positive relative payoff.
    #[error("infeasible portfolio: {0}")]
    Infeasible(String),

    /// A case analysis that should be exhaustive was not.
    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    /// The experiment configuration is incomplete or inconsistent.
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, KellyError>;
