use std::path::PathBuf;

use thiserror::Error;

/// Errors of the file layer and the command-line front end.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),
    /// `row` is the 1-based line number, `column` the 0-based field index.
    #[error("cannot parse row {row}, column {column}: {text:?}")]
    ParseError { row: usize, column: usize, text: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] excess_core::Error),
}

impl CliError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Self::FileNotFound(path)
        } else {
            Self::Io { path, source }
        }
    }

    /// Process exit code: 1 usage or invalid parameters, 2 data problems,
    /// 3 numerical failures.
    pub fn exit_code(&self) -> i32 {
        use excess_core::Error as E;
        match self {
            Self::Config(_) => 1,
            Self::FileNotFound(_) | Self::ParseError { .. } | Self::Io { .. } => 2,
            Self::Core(e) => match e {
                E::NumericalBlowup(_) | E::NotPositiveDefinite | E::NoPlateau | E::NoUnitSlopeRange => 3,
                E::InvalidDt(_)
                | E::InvalidFactor(_)
                | E::NegativeEta(_)
                | E::InvalidEmbedding { .. }
                | E::EmptyGrid
                | E::InvalidGrid(_)
                | E::InvalidParams(_)
                | E::NonStationaryParams { .. } => 1,
                _ => 2,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
