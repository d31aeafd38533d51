use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("precision exhausted at {bits} bits while {what}")]
    PrecisionExhausted { what: String, bits: usize },

    #[error("window gamma {window} does not match phase gamma {phase}")]
    GammaMismatch { window: f64, phase: f64 },

    #[error("panel count {needed:.3e} exceeds limit {limit}")]
    PanelOverflow { needed: f64, limit: usize },

    #[error("budget exceeded: {what} needs {needed:.3e}, limit {limit:.3e}")]
    BudgetExceeded {
        what: &'static str,
        needed: f64,
        limit: f64,
    },

    #[error("range collapse: X_{index} = {value:.4} is below {min}")]
    RangeCollapse { index: usize, value: f64, min: f64 },

    #[error("{what} did not converge: achieved {achieved:.3e}, target {target:.3e}")]
    NonConvergence {
        what: &'static str,
        achieved: f64,
        target: f64,
    },

    #[error("kernel sandwich violated at x = {x}: {detail}")]
    SandwichViolation { x: f64, detail: String },

    #[error("unknown identifier `{0}`")]
    UnknownId(String),

    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Budget, panel or precision exhaustion, as opposed to bad input.
    pub fn is_exhaustion(&self) -> bool {
        matches!(
            self,
            Error::PrecisionExhausted { .. }
                | Error::BudgetExceeded { .. }
                | Error::PanelOverflow { .. }
                | Error::NonConvergence { .. }
        )
    }

    /// Short machine-readable tag.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::PrecisionExhausted { .. } => "precision_exhausted",
            Error::GammaMismatch { .. } => "gamma_mismatch",
            Error::PanelOverflow { .. } => "panel_overflow",
            Error::BudgetExceeded { .. } => "budget_exceeded",
            Error::RangeCollapse { .. } => "range_collapse",
            Error::NonConvergence { .. } => "non_convergence",
            Error::SandwichViolation { .. } => "sandwich_violation",
            Error::UnknownId(_) => "unknown_id",
            Error::Inconsistent(_) => "inconsistent",
        }
    }
}
