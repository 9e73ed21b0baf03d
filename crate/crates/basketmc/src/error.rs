//! Error types shared across the engine and the CLI.

use thiserror::Error;

/// All failure modes of the pricing engine.
#[derive(Debug, Error)]
pub enum Error {
    /// A run parameter violates a model invariant. `field` is the
    /// dotted path of the offending entry (e.g. `copula.rho`).
    #[error("invalid configuration at `{field}`: {message}")]
    InvalidConfig { field: String, message: String },

    /// The configuration text could not be parsed at all. The message
    /// carries the line/column reported by the parser.
    #[error("config parse error: {0}")]
    ConfigSyntax(String),

    /// A root solve failed even after the bisection fallback. Carries the
    /// default order and intensity parameters so the instance can be replayed.
    #[error("root solve failed for default #{k} (a={a}, c={c}, d={d}): {message}")]
    RootSolve {
        k: usize,
        a: f64,
        c: f64,
        d: f64,
        message: String,
    },

    /// A numerical failure inside a simulated path, tagged with the block
    /// (sub-stream id) and the path index within that block.
    #[error("path {path_in_block} of block {block}: {source}")]
    PathFailure {
        block: u64,
        path_in_block: u64,
        #[source]
        source: Box<Error>,
    },

    /// Fee leg expectation is not positive, so no finite swap rate exists.
    #[error("degenerate contract: fee leg expectation {fee} is not positive")]
    DegenerateContract { fee: f64 },

    /// Counterparty-gated legs requested on a timeline with no counterparty
    /// default time.
    #[error("counterparty-gated legs requested but the timeline carries no counterparty time")]
    MissingCounterparty,

    /// The analytic oracle only covers the no-decay model.
    #[error("unsupported model for the analytic oracle: {0}")]
    UnsupportedModel(String),

    /// Partial accumulators from different plans cannot be merged.
    #[error("merge rejected: partial fingerprint {got:#x} does not match plan {expected:#x}")]
    MergeMismatch { expected: u64, got: u64 },

    /// Worker pool could not be constructed.
    #[error("thread pool: {0}")]
    ThreadPool(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code class: 2 for configuration problems, 3 for
    /// numerical failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig { .. } | Error::ConfigSyntax(_) | Error::UnsupportedModel(_) => 2,
            Error::RootSolve { .. }
            | Error::PathFailure { .. }
            | Error::DegenerateContract { .. }
            | Error::MergeMismatch { .. } => 3,
            Error::MissingCounterparty => 2,
            Error::ThreadPool(_) | Error::Io(_) => 1,
        }
    }

    pub(crate) fn invalid(field: &str, message: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.to_string(),
            message: message.into(),
        }
    }
}
