//! Command failure modes, mapped onto the process exit-code contract.
//!
//! Every command exits with 0 on success, 1 on a model-level failure
//! (the input parsed but the model or the requested analysis is
//! invalid), and 2 on a usage or parse failure (unreadable file,
//! malformed structured text, unsupported schema fields).  Verdict
//! commands additionally use exit 1 for a negative verdict where the
//! command contract says so (`validate` on an invalid process,
//! `compare` on models that are not close).

/// A command failure carrying its exit-code class.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// The input parsed, but the model or requested analysis is invalid
    /// (exit code 1).
    #[error("{0}")]
    Model(String),
    /// The invocation or an input file could not be understood
    /// (exit code 2).
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// The process exit code for this failure class.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Model(_) => 1,
            CliError::Usage(_) => 2,
        }
    }
}

/// Library errors surface as model-level failures: by the time the
/// toolkit rejects something, the file itself was well-formed.
impl From<procmat::Error> for CliError {
    fn from(e: procmat::Error) -> Self {
        CliError::Model(e.to_string())
    }
}

/// Command result: the success exit code (0, or 1 for negative
/// verdicts) or a classified failure.
pub type CmdResult = Result<i32, CliError>;
