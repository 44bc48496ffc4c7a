//! CLI-side error type. Every variant means "the run could not proceed" and
//! maps to exit code 1; failed checks are not errors and exit 2 through the
//! normal report path.

use std::fmt;

#[derive(Debug)]
pub struct CliError(String);

impl CliError {
    pub fn new(msg: impl Into<String>) -> Self {
        CliError(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CliError {}

impl From<kpf_core::Error> for CliError {
    fn from(e: kpf_core::Error) -> Self {
        CliError(e.to_string())
    }
}
