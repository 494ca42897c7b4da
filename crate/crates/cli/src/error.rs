//! CLI-level errors, each mapped to a process exit code.

use std::fmt;

/// What went wrong, bucketed by exit code: 2 for configuration/argument/IO
/// problems, 3 for numerical failures, 4 for validation checks that ran
/// and failed.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Validation(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) | CliError::Numerical(msg) | CliError::Validation(msg) => {
                f.write_str(msg)
            }
        }
    }
}

impl std::error::Error for CliError {}

/// Buckets a library error: genuinely numerical failures keep exit code 3,
/// everything else is a configuration problem.
pub fn map_core_error(error: cbf_core::Error) -> CliError {
    match error {
        cbf_core::Error::DegenerateRates { .. }
        | cbf_core::Error::SingularSystem
        | cbf_core::Error::ResidualExceeded { .. } => CliError::Numerical(error.to_string()),
        _ => CliError::Config(error.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_buckets() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::Numerical("x".into()).exit_code(), 3);
        assert_eq!(CliError::Validation("x".into()).exit_code(), 4);
    }

    #[test]
    fn degenerate_rates_map_to_numerical() {
        let err = map_core_error(cbf_core::Error::DegenerateRates {
            separation: 0.0,
            limit: 1e-9,
        });
        assert_eq!(err.exit_code(), 3);
        let err = map_core_error(cbf_core::Error::EmptyRates);
        assert_eq!(err.exit_code(), 2);
    }
}
