use thiserror::Error;

/// Errors shared across the geometry and Monte Carlo modules.
#[derive(Debug, Error)]
pub enum KkError {
    /// A metric (or fibre metric) failed an invertibility or conditioning check.
    #[error("singular metric: {0}")]
    SingularMetric(String),

    /// A requested point (or its finite-difference stencil) leaves the chart.
    #[error("out of domain: {0}")]
    OutOfDomain(String),

    /// A stochastic path stepped outside a non-periodic chart.
    #[error("path left the chart at t = {t}")]
    ChartExit { t: f64 },

    /// Every sampled path was discarded, leaving nothing to average.
    #[error("all {n_paths} paths were discarded")]
    InsufficientPaths { n_paths: usize },

    /// Representation generators do not commute like the group's structure constants.
    #[error("representation mismatch: {0}")]
    RepresentationMismatch(String),

    /// Invalid construction data (non-symmetric input, bad dimensions, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, KkError>;
