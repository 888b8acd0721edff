//! Mapping of failures to process exit codes.

use std::fmt;

use cbm_core::Error as CoreError;

pub const OK: u8 = 0;
pub const VALIDATION: u8 = 1;
pub const NUMERICAL: u8 = 2;

/// A configuration or input problem (exit code 1).
#[derive(Debug)]
pub struct Validation(pub String);

impl Validation {
    pub fn new(msg: impl Into<String>) -> Self {
        Validation(msg.into())
    }
}

impl fmt::Display for Validation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Validation {}

/// Checks that ran but did not hold (exit code 2).
#[derive(Debug)]
pub struct ChecksFailed(pub Vec<String>);

impl fmt::Display for ChecksFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "failed checks: {}", self.0.join(", "))
    }
}

impl std::error::Error for ChecksFailed {}

pub fn code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Validation>() {
            return VALIDATION;
        }
        if cause.is::<ChecksFailed>() {
            return NUMERICAL;
        }
        if let Some(e) = cause.downcast_ref::<CoreError>() {
            return match e {
                CoreError::InvalidParameter { .. } | CoreError::Data(_) | CoreError::Csv(_) | CoreError::Io(_) => VALIDATION,
                _ => NUMERICAL,
            };
        }
    }
    VALIDATION
}
