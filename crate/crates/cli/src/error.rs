use std::fmt;

/// Failure classes with distinct exit codes.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    MissingInput(String),
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::MissingInput(_) => 4,
            CliError::Other(_) => 1,
        }
    }

    /// Classifies an error raised while reading a required input file.
    pub fn input(e: sobtc_core::Error) -> Self {
        match e {
            sobtc_core::Error::Io(io) if io.kind() == std::io::ErrorKind::NotFound => CliError::MissingInput(io.to_string()),
            other => other.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (kind, msg) = match self {
            CliError::Config(m) => ("configuration error", m),
            CliError::Numerical(m) => ("numerical failure", m),
            CliError::MissingInput(m) => ("missing input", m),
            CliError::Other(m) => ("error", m),
        };
        write!(f, "{kind}: {msg}")
    }
}

impl From<sobtc_core::Error> for CliError {
    fn from(e: sobtc_core::Error) -> Self {
        use sobtc_core::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidParam { .. } | E::Geometry(_) => CliError::Config(msg),
            E::NoRootInBracket { .. } | E::Numerical { .. } | E::Degenerate(_) => CliError::Numerical(msg),
            E::Format(_) | E::Json(_) => CliError::Other(msg),
            E::Io(_) => CliError::Other(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Other(e.to_string())
    }
}
