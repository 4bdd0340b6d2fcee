use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} = {value} is outside its domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: String,
    },
    #[error("dimension mismatch: {what} has length {found}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },
    #[error("score is not non-increasing: increment {max_violation} at eta = {violating_eta}")]
    NotRegular {
        violating_eta: f64,
        max_violation: f64,
    },
    #[error("enumeration of {size} plans exceeds the budget of {limit}")]
    EnumerationBudget { size: f64, limit: f64 },
    #[error("no feasible plan within the given caps")]
    NoFeasiblePlan,
    #[error("trial count must be at least 1")]
    ZeroTrials,
    #[error("winner {winner} has no critical bid")]
    MissingCriticalBid { winner: usize },
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: f64, domain: impl Into<String>) -> Self {
        Error::Domain {
            what,
            value,
            domain: domain.into(),
        }
    }

    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }

    pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
        if expected == found {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                what,
                expected,
                found,
            })
        }
    }
}
