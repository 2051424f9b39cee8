use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Truncation point at or beyond the upper end of the support.
    #[error("degenerate truncation at {threshold}: F(b) = {cdf} leaves no mass above the threshold")]
    DegenerateTruncation { threshold: f64, cdf: f64 },

    /// The contest is not worth entering at these parameters.
    #[error("not viable: {0}")]
    NotViable(String),

    #[error("no search incentive: every prize equals the consolation prize")]
    NoSearchIncentive,

    #[error("no equilibrium of the requested kind exists: {0}")]
    NoneExists(String),

    #[error("numeric failure in {context}: {detail}")]
    NumericFailure { context: String, detail: String },

    #[error("divergent objective: {0}")]
    DivergentObjective(String),

    #[error("could not parse distribution: {0}")]
    Parse(String),

    #[error("output error: {0}")]
    Output(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn numeric(context: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::NumericFailure {
            context: context.into(),
            detail: detail.into(),
        }
    }

    /// True for the outcomes the CLI reports with exit code 2.
    pub fn is_non_existence(&self) -> bool {
        matches!(
            self,
            Error::NotViable(_) | Error::NoneExists(_) | Error::NoSearchIncentive
        )
    }
}
