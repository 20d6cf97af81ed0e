//! Driver for the Prandtl boundary-layer laboratory: configuration parsing,
//! subcommand dispatch and report serialization.
//!
//! # Exit codes
//!
//! | code | meaning |
//! |-----:|---------|
//! | 0 | every verdict passed |
//! | 1 | the run completed but a verdict failed |
//! | 2 | usage or configuration error |
//! | 3 | I/O error |
//! | 10 | contract violation |
//! | 11 | value out of range |
//! | 12 | unsupported request |
//! | 13 | structural hypothesis on the vorticity violated |
//! | 14 | initial data rejected |
//! | 15 | degenerate evaluation |
//! | 16 | time step rejected |
//! | 17 | blow-up |
//! | 18 | non-finite energy |
//! | 19 | insufficient data |
//! | 20 | inconclusive fit |

pub mod commands;
pub mod config;
pub mod output;

use thiserror::Error;

/// Everything that can stop the driver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config{}: {msg}", line.map(|l| format!(" line {l}")).unwrap_or_default())]
    Config { line: Option<usize>, msg: String },
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] prandtl_core::Error),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        use prandtl_core::Error as E;
        match self {
            Self::Usage(_) | Self::Config { .. } => 2,
            Self::Io(_) => 3,
            Self::Core(e) => match e {
                E::Contract(_) => 10,
                E::Range(_) => 11,
                E::Unsupported(_) => 12,
                E::Hypothesis(_) => 13,
                E::Generation(_) => 14,
                E::Degenerate(_) => 15,
                E::StepRejected { .. } => 16,
                E::BlowUp { .. } => 17,
                E::NonFinite { .. } => 18,
                E::InsufficientData(_) => 19,
                E::Inconclusive(_) => 20,
            },
        }
    }
}

/// Exit status when every verdict passed.
pub const EXIT_OK: i32 = 0;
/// Exit status when a verdict failed.
pub const EXIT_VERDICT_FAILED: i32 = 1;

#[cfg(test)]
mod tests {
    use super::*;
    use prandtl_core::Error as E;

    #[test]
    fn exit_codes_are_distinct() {
        let errs = [
            CliError::Usage(String::new()),
            CliError::Io(String::new()),
            E::Contract(String::new()).into(),
            E::Range(String::new()).into(),
            E::Unsupported(String::new()).into(),
            E::Hypothesis(String::new()).into(),
            E::Generation(String::new()).into(),
            E::Degenerate(String::new()).into(),
            E::StepRejected { t: 0.0, reason: String::new() }.into(),
            E::BlowUp { t: 0.0, reason: String::new() }.into(),
            E::NonFinite { family: "x", j: 0 }.into(),
            E::InsufficientData(String::new()).into(),
            E::Inconclusive(String::new()).into(),
        ];
        let codes: std::collections::BTreeSet<i32> = errs.iter().map(CliError::exit_code).collect();
        assert_eq!(codes.len(), errs.len());
        assert!(!codes.contains(&EXIT_OK) && !codes.contains(&EXIT_VERDICT_FAILED));
    }

    #[test]
    fn config_error_mentions_line() {
        let e = CliError::Config {
            line: Some(4),
            msg: "bad".into(),
        };
        assert_eq!(e.to_string(), "config line 4: bad");
    }
}
