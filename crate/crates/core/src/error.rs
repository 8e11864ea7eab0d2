use thiserror::Error;

/// Errors raised by the simulator and the verification engines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SmfError {
    /// A caller broke an operation's precondition (mismatched base point,
    /// wrong representation, non-tangent input, bad grid size, ...).
    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// A chart-based state straddles the chart boundary; the map has to be
    /// migrated to another chart before derivatives can be taken.
    #[error("re-chart required at node {node}: |w| = {modulus:.3}")]
    ReChartRequired { node: usize, modulus: f64 },

    #[error("fixed-point iteration did not converge after {iterations} iterations (residual {residual:.3e}); reduce dt")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("need at least {needed} stored samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("invalid configuration key `{key}`: {message}")]
    InvalidConfig { key: String, message: String },

    #[error("malformed balance-system file: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for SmfError {
    fn from(e: std::io::Error) -> Self {
        SmfError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SmfError>;

pub(crate) fn contract(msg: impl Into<String>) -> SmfError {
    SmfError::ContractViolation(msg.into())
}
