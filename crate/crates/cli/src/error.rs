use thiserror::Error;

/// Bad configuration or usage.
pub const EXIT_CONFIG: i32 = 2;
/// Numerical failure, including an escalated tail-mass warning.
pub const EXIT_NUMERIC: i32 = 3;
/// Anything else (I/O, malformed input data).
pub const EXIT_RUNTIME: i32 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("truncated prior tail mass {mass:.3e} exceeds {threshold:.0e} (raise k_max or d_max, or unset strict_tail_mass)")]
    TailMass { mass: f64, threshold: f64 },
    #[error(transparent)]
    Core(#[from] seqadapt::Error),
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use seqadapt::Error as E;
        match self {
            Self::Usage(_) | Self::Config(_) => EXIT_CONFIG,
            Self::TailMass { .. } => EXIT_NUMERIC,
            Self::Core(e) => match e {
                E::InvalidParameter { .. } | E::DimensionMismatch { .. } | E::UnknownFamily(_) | E::Json(_) => {
                    EXIT_CONFIG
                }
                E::Numerical(_) | E::NonFinite { .. } => EXIT_NUMERIC,
                _ => EXIT_RUNTIME,
            },
            Self::File { .. } | Self::Io(_) | Self::Json(_) => EXIT_RUNTIME,
        }
    }
}

pub(crate) fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub type CliResult<T> = Result<T, CliError>;
