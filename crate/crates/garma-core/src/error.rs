//! Error type shared across the crate.

use alloc::string::String;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Model or input specification violates an invariant (c outside (0,1),
    /// dimension mismatch, bad period, empty design).
    InvalidSpec(String),
    /// Linear predictor exceeded the overflow guard at 1-based time `t`.
    NumericOverflow { t: usize, eta: f64 },
    /// Conditional information matrix is singular at the requested point.
    SingularInformation,
    /// Fisher scoring hit singular information on every attempted step;
    /// the model is not identifiable on this data.
    NonIdentifiable,
    /// Every candidate refit failed, so no forecast distribution exists.
    ForecastFailed,
    /// Path enumeration for m-step forecasting exceeded the tuple budget.
    BudgetExceeded { budget: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidSpec(msg) => write!(f, "invalid specification: {msg}"),
            Error::NumericOverflow { t, eta } => {
                write!(f, "linear predictor overflow at t={t} (eta={eta:.3})")
            }
            Error::SingularInformation => write!(f, "singular conditional information matrix"),
            Error::NonIdentifiable => {
                write!(f, "model not identifiable: information matrix singular at every step")
            }
            Error::ForecastFailed => write!(f, "all candidate refits failed"),
            Error::BudgetExceeded { budget } => {
                write!(f, "path enumeration exceeded the {budget}-tuple budget")
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
