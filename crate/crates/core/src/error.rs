use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{quantity} = {value} outside admissible range [{lo}, {hi}]")]
    Domain {
        quantity: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("degenerate jump: shock speed undefined for equal states {0}")]
    DegenerateJump(f64),

    #[error("invalid flux: {0}")]
    InvalidFlux(String),

    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("classifier matched {matched:?} for (rho_l, rho_r) = ({rho_l}, {rho_r}); expected exactly one case")]
    Classification {
        rho_l: f64,
        rho_r: f64,
        matched: Vec<&'static str>,
    },

    #[error("numerical failure at step {step}: {message}")]
    Numerical { step: usize, message: String },

    #[error("config error{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Config { line: Option<usize>, message: String },

    #[error("{0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(quantity: &'static str, value: f64, lo: f64, hi: f64) -> Self {
        Error::Domain {
            quantity,
            value,
            lo,
            hi,
        }
    }

    pub(crate) fn config(message: impl Into<String>) -> Self {
        Error::Config {
            line: None,
            message: message.into(),
        }
    }

    /// True for errors caused by bad input rather than by the numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config { .. }
                | Error::InvalidFlux(_)
                | Error::InvalidConstraint(_)
                | Error::InvalidWeight(_)
                | Error::InvalidGrid(_)
                | Error::InvalidArgument(_)
                | Error::Domain { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
