use std::fmt;

use crpoint::Error;
use serde::Serialize;

/// A failed run together with its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Malformed JSON, unreadable files, bad flags or violated preconditions.
    Input(String),
    /// Non-convergence, non-generic spectra and failed consistency checks.
    Numeric(String),
    /// A certificate that did not pass.
    Certification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Certification(_) => 1,
            CliError::Input(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Certification(_) => "certification",
            CliError::Input(_) => "invalid_input",
            CliError::Numeric(_) => "numeric",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Numeric(m) | CliError::Certification(m) => m,
        }
    }

    /// `{"error": {"kind": …, "code": …, "message": …}}`.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Body<'a> {
            kind: &'a str,
            code: i32,
            message: &'a str,
        }
        #[derive(Serialize)]
        struct Wrapper<'a> {
            error: Body<'a>,
        }
        let w = Wrapper {
            error: Body {
                kind: self.kind(),
                code: self.exit_code(),
                message: self.message(),
            },
        };
        serde_json::to_string(&w).expect("error object serializes")
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.message())
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Dimension(_)
            | Error::Precondition(_)
            | Error::InvalidGroupElement(_)
            | Error::IllPosedCount(_) => CliError::Input(msg),
            Error::Certification { .. } => CliError::Certification(msg),
            Error::Numeric { .. }
            | Error::Consistency(_)
            | Error::Sampling(_)
            | Error::Genericity(_)
            | Error::PathConstruction(_) => CliError::Numeric(msg),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(format!("malformed JSON: {e}"))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
