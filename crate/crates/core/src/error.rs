use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid group spec: {0}")]
    InvalidSpec(String),

    #[error("invalid element: {0}")]
    InvalidElement(String),

    #[error("cannot parse element text: {0}")]
    Parse(String),

    #[error("truncation required: {0}")]
    TruncationRequired(String),

    #[error("invalid step distribution: {0}")]
    InvalidMeasure(String),

    #[error("state budget exceeded: reachable set grew to {reached} states (budget {budget})")]
    BudgetExceeded { reached: usize, budget: usize },

    #[error("exponential moment is infinite: {0}")]
    InfiniteMoment(String),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("estimator error: {0}")]
    Estimator(String),

    #[error("probe error: {0}")]
    Probe(String),
}

pub type Result<T> = std::result::Result<T, Error>;
