use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates its documented range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A scenario or configuration is internally inconsistent.
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    /// Not enough samples or exceedances to run an estimator.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A coverage target that cannot be met within the search bracket.
    #[error("target infeasible: coverage {eta_at_hi:.4} at the upper bracket is below the target {eta_star:.4}")]
    TargetInfeasible { eta_at_hi: f64, eta_star: f64 },

    /// The tail fit did not converge or produced invalid parameters.
    #[error("tail fit failed: {0}")]
    FitFailed(String),

    /// An outage level finer than the data can resolve.
    #[error("resolution limit: smallest resolvable outage with this data is {min_epsilon:.3e}")]
    ResolutionLimit { min_epsilon: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
