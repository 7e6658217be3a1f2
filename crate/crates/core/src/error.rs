use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mirror plane: {0}")]
    InvalidPlane(String),
    #[error("frame mismatch: expected {expected}, got {got}")]
    FrameError { expected: String, got: String },
    #[error("transform is not rigid: {0}")]
    InvalidTransform(String),
    #[error("point is behind the camera (depth {depth:e})")]
    BehindCamera { depth: f64 },
    #[error("shape mismatch: {0}")]
    ShapeError(String),
    #[error("too few points: need at least {needed}, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("degenerate point cloud: {0}")]
    DegenerateCloud(String),
    #[error("ill-conditioned triangulation: {0}")]
    IllConditioned(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("unknown view: {0}")]
    UnknownView(String),
    #[error("configuration error: {0}")]
    ConfigError(String),
    #[error("no mirror plane available for virtual view {0}")]
    PlaneUnavailable(usize),
    #[error("non-finite loss or gradient at iteration {iteration}")]
    NumericalFailure { iteration: usize },
    #[error("camera auto-placement failed after {attempts} attempts")]
    PlacementFailure { attempts: usize },
    #[error("empty point cloud")]
    EmptyCloud,
    #[error("pair graph needs at least one virtual view")]
    NoVirtualViews,
    #[error("video has no frames")]
    EmptyVideo,
    #[error("missing required input: {}", .0.display())]
    MissingInput(PathBuf),
    #[error("{}:{line}: {message}", file.display())]
    ParseError {
        file: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit status for the command-line driver: 3 for a missing
    /// prerequisite, 4 for a numerical failure, 2 for any other input or
    /// configuration problem.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::MissingInput(_) => 3,
            Error::NumericalFailure { .. } => 4,
            _ => 2,
        }
    }

    pub(crate) fn parse(file: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::ParseError {
            file: file.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
