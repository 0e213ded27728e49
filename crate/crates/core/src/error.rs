use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("user population is empty")]
    EmptyPopulation,

    #[error("invalid user profile #{index}: {reason}")]
    InvalidProfile { index: usize, reason: String },

    #[error("invalid cost parameters: {0}")]
    InvalidCosts(String),

    #[error("invalid sensing distribution: {0}")]
    InvalidDistribution(String),

    #[error("argument outside the model domain: {0}")]
    Domain(String),

    #[error("demand is unbounded at price {price}")]
    UnboundedDemand { price: f64 },

    #[error("could not bracket a root: {0}")]
    BracketFailure(String),

    #[error("quadrature produced a non-finite value")]
    QuadratureFailure,

    #[error("optimizer could not localize a maximum: {0}")]
    OptimizerStall(String),

    #[error("no sensing-realization threshold exists: {0}")]
    NoThreshold(String),

    #[error("failed to parse scenario: {0}")]
    Parse(String),

    #[error("invalid sweep range: {0}")]
    InvalidRange(String),

    #[error("i/o failure: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable category used by front ends.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::InvalidRange(_) => "usage",
            Error::EmptyPopulation
            | Error::InvalidProfile { .. }
            | Error::InvalidCosts(_)
            | Error::InvalidDistribution(_)
            | Error::Domain(_) => "validation",
            Error::UnboundedDemand { .. }
            | Error::BracketFailure(_)
            | Error::QuadratureFailure
            | Error::OptimizerStall(_)
            | Error::NoThreshold(_) => "numeric",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
