// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use spin_transfer::Error;

pub const USAGE: u8 = 1;
pub const TOLERANCE: u8 = 2;
pub const NUMERICAL: u8 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: USAGE, message: message.into() }
    }

    pub fn tolerance(message: impl Into<String>) -> Self {
        Self { code: TOLERANCE, message: message.into() }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self { code: NUMERICAL, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// Bad input maps to a usage error; failures that only show up once the
/// numerics run map to a numerical error.
impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        match e {
            Error::DegenerateGeometry { .. }
            | Error::NonPositiveDistance(_)
            | Error::UndefinedRatio
            | Error::PhaseRange(_)
            | Error::InvalidMatrix(_) => Self::numerical(message),
            _ => Self::usage(message),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::usage(format!("i/o error: {e}"))
    }
}
