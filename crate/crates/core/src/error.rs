use thiserror::Error;

/// Errors raised by the numerical and simulation layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("`{function}` evaluated outside its domain: {detail}")]
    Domain { function: &'static str, detail: String },

    #[error("quadrature did not converge ({context}): estimate {estimate:e}, error {error:e} after depth {depth}")]
    Quadrature {
        context: String,
        estimate: f64,
        error: f64,
        depth: usize,
    },

    #[error("finite difference in `{function}` lost all significant digits at t = {at}")]
    StepBreakdown { function: &'static str, at: f64 },

    #[error("root finding failed in `{function}`: {detail}")]
    RootFinding { function: &'static str, detail: String },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("every one of the {0} simulated cycles was censored")]
    AllCensored(usize),

    #[error("analytic series truncation left mass {deficit:e} (limit {limit:e})")]
    Truncation { deficit: f64, limit: f64 },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

impl Error {
    /// Prefixes the context of a quadrature failure with the name of the
    /// enclosing formula or integration axis. Other variants pass through.
    pub fn within(self, outer: &str) -> Self {
        match self {
            Error::Quadrature {
                context,
                estimate,
                error,
                depth,
            } => Error::Quadrature {
                context: if context.is_empty() {
                    outer.to_string()
                } else {
                    format!("{outer} / {context}")
                },
                estimate,
                error,
                depth,
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
