use thiserror::Error;

/// Errors raised by kernels, integrators and problem builders.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("rank {rank} exceeds admissible maximum {max}")]
    Rank { rank: usize, max: usize },

    #[error("mode {mode} out of range for an order-{order} tensor")]
    Mode { mode: usize, order: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("Gramian is numerically singular (inverse norm {0:.3e})")]
    Singular(f64),

    #[error("right-hand side does not expose an explicit increment")]
    NoExplicitIncrement,

    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dense array with {entries} entries exceeds the cap of {cap}")]
    TooLarge { entries: usize, cap: usize },

    #[error("malformed reference file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
