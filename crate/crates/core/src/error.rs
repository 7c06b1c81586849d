use thiserror::Error;

/// Failures surfaced by the samplers, oracles, diagnostics and experiment layer.
#[derive(Debug, Error)]
pub enum AbcError {
    /// Malformed or inconsistent input data (empty datasets, length mismatches, ...).
    #[error("input error: {0}")]
    Input(String),

    /// Invalid configuration (non-positive kernel scale, bad hyperparameters, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// A sampler ran out of simulations before producing a usable draw.
    #[error("simulation budget exhausted after {attempts} attempts: {hint}")]
    BudgetExhausted { attempts: u64, hint: String },

    /// A Metropolis-Hastings ratio evaluated to NaN. `state` carries a dump of the chain state.
    #[error("numerical fault: {message} (state: {state})")]
    NumericalFault { message: String, state: String },

    #[error("invariant breach: {0}")]
    InvariantBreach(String),

    #[error("insufficient sample: {0}")]
    InsufficientSample(String),

    /// Every importance weight was zero.
    #[error("degenerate weights: {0}")]
    DegenerateWeights(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, AbcError>;
