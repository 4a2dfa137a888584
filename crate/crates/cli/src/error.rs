use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

pub const EXIT_SUCCESS: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    /// `key` is the dotted path of the offending entry, empty for syntax errors.
    #[error("config error at `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// The flow or an analysis stopped on a numerical failure.
    #[error("runtime termination: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Config { key: key.into(), reason: reason.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::UnknownScenario(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
            CliError::Io { .. } => EXIT_IO,
        }
    }

    /// Machine-readable form written to standard error.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Report<'a> {
            error: &'a str,
            message: String,
            #[serde(skip_serializing_if = "Option::is_none")]
            key: Option<&'a str>,
            exit_code: i32,
        }
        let (kind, key) = match self {
            CliError::Config { key, .. } => ("config", Some(key.as_str())),
            CliError::UnknownScenario(_) => ("unknown-scenario", None),
            CliError::Io { .. } => ("io", None),
            CliError::Runtime(_) => ("runtime", None),
        };
        let report = Report { error: kind, message: self.to_string(), key, exit_code: self.exit_code() };
        serde_json::to_string(&report).unwrap_or_else(|_| format!("{{\"error\":\"{kind}\"}}"))
    }
}
