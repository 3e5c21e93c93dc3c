use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid does not resolve band limit {lmax}: {reason}")]
    Resolution { lmax: usize, reason: String },

    #[error("Gauss-Legendre root {index} of P_{n} did not converge after {iterations} iterations")]
    QuadratureConvergence {
        n: usize,
        index: usize,
        iterations: usize,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("blow-up at t = {t}: {what}")]
    BlowUp { t: f64, what: String },

    #[error("Picard iteration failed to contract after {iterations} iterations at t = {t} (last difference {last_diff:e}); try a smaller dt")]
    ContractionFailure {
        t: f64,
        iterations: usize,
        last_diff: f64,
    },

    #[error("noise summability check failed: {0}")]
    Summability(String),

    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Config(#[from] crate::cli::ConfigError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
