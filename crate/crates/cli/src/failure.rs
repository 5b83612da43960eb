// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use gibbs_thermo::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const INVALID_INPUT: u8 = 2;
    pub const BOUNDARY: u8 = 3;
    pub const DIMENSION: u8 = 4;
    pub const CHECK_FAILED: u8 = 5;
}

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Failure {
            code: exit::INVALID_INPUT,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::TargetOutOfRange { .. }
            | Error::DegenerateSpectrum
            | Error::PureEigenstateBoundary { .. }
            | Error::BracketFailure { .. } => exit::BOUNDARY,
            Error::DimensionMismatch { .. } => exit::DIMENSION,
            _ => exit::INVALID_INPUT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}
