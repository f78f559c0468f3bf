use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("{0}")]
    Usage(String),

    #[error("{}{error}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Core {
        line: Option<usize>,
        error: mimo_ncs::Error,
    },
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Parse { .. } => "cli.parse",
            CliError::Io { .. } => "cli.io",
            CliError::Usage(_) => "cli.usage",
            CliError::Core { error, .. } => error.code(),
        }
    }
}

impl From<mimo_ncs::Error> for CliError {
    fn from(error: mimo_ncs::Error) -> Self {
        CliError::Core { line: None, error }
    }
}
