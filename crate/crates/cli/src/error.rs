use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("I/O error: {context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] blackout_co::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use blackout_co::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Config(_) => 4,
            CliError::Core(e) => match e {
                E::InvalidArgument(_) | E::InstanceTooLarge { .. } => 2,
                E::Io(_) | E::Parse { .. } => 3,
                _ => 4,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Attaches the offending path to I/O failures, including those surfaced by the core readers.
pub fn at_path<T>(path: &std::path::Path, r: Result<T, blackout_co::Error>) -> CliResult<T> {
    r.map_err(|e| match e {
        blackout_co::Error::Io(source) => CliError::Io { context: path.display().to_string(), source },
        blackout_co::Error::Parse { line, msg } => CliError::Core(blackout_co::Error::Parse {
            line,
            msg: format!("{}: {msg}", path.display()),
        }),
        other => CliError::Core(other),
    })
}

pub fn io_at<T>(path: &std::path::Path, r: std::io::Result<T>) -> CliResult<T> {
    r.map_err(|source| CliError::Io { context: path.display().to_string(), source })
}
