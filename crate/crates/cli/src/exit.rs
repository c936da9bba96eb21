use std::fmt;

use flowguard_core::Error;

pub const USAGE: u8 = 2;
pub const TRAINING: u8 = 3;
pub const DATA: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: USAGE,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// Exit code for a library error: 2 configuration, 3 training, 4 data integrity.
pub fn code_for(err: &Error) -> u8 {
    match err.root() {
        Error::NonFiniteLoss { .. } | Error::ClassTooSmall { .. } | Error::EmptyData | Error::BadFractions(_) => {
            TRAINING
        }
        Error::UnknownLabel(_)
        | Error::MissingLabelColumn
        | Error::EmptyDataset
        | Error::SchemaMismatch(_)
        | Error::MissingColumn(_)
        | Error::LengthMismatch { .. }
        | Error::DimensionMismatch { .. }
        | Error::BadDistribution { .. }
        | Error::BadCode(_)
        | Error::TimeRegression { .. }
        | Error::BadEvent(_)
        | Error::EmptyBackground
        | Error::Csv(_) => DATA,
        _ => USAGE,
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        Self {
            code: code_for(&err),
            message: err.to_string(),
        }
    }
}
