use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid scenario: {0}")]
    Schema(String),

    #[error("invalid {field}: {message}")]
    Invalid { field: String, message: String },

    #[error("{check} needs experiments {missing:?} beyond a schedule of {available} times")]
    MissingExperiments {
        check: String,
        missing: Vec<Vec<usize>>,
        available: usize,
    },

    #[error("simulation failed: {0}")]
    Run(#[from] macroreal::Error),

    #[error("cannot write {path}: {message}")]
    Output { path: String, message: String },
}

impl CliError {
    pub(crate) fn from_json(e: serde_json::Error) -> Self {
        if e.line() == 0 {
            CliError::Schema(e.to_string())
        } else {
            CliError::Parse {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            }
        }
    }
}
