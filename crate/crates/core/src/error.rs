use thiserror::Error;

/// Errors raised by the distribution, characterization and fitting routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A model, baseline or option set is malformed.
    #[error("configuration error: {0}")]
    Config(String),

    /// An iterative routine stopped before meeting its tolerance.
    #[error("no convergence in {context}: last estimate {estimate:e}, error bound {bound:e}")]
    NonConvergence {
        context: String,
        estimate: f64,
        bound: f64,
    },

    /// The interaction matrix does not define a finite normalizing integral.
    #[error("non-integrable configuration: {0}")]
    NonIntegrable(String),

    /// A conditional law has a non-positive shape or an infinite normalizer.
    #[error("conditional distribution does not exist: {0}")]
    ConditionalNonexistence(String),

    /// A ratio or quotient left the representable range.
    #[error("overflow: {0}")]
    Overflow(String),

    /// A four-point density ratio involved a zero density.
    #[error("degenerate ratio: {0}")]
    DegenerateRatio(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn non_convergence(context: impl Into<String>, estimate: f64, bound: f64) -> Self {
        Error::NonConvergence {
            context: context.into(),
            estimate,
            bound,
        }
    }

    /// Short machine-readable tag for the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Config(_) => "config",
            Error::NonConvergence { .. } => "non-convergence",
            Error::NonIntegrable(_) => "non-integrable",
            Error::ConditionalNonexistence(_) => "conditional-nonexistence",
            Error::Overflow(_) => "overflow",
            Error::DegenerateRatio(_) => "degenerate-ratio",
        }
    }

    /// True for failures of a numerical iteration rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonConvergence { .. } | Error::Overflow(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
