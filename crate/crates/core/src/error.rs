use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the library.
///
/// Variants are split between input/validation problems and numerical
/// failures; [`Error::is_numerical`] drives the CLI exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error(
        "power-law fit failed after {iterations} iterations (weighted rmse {rmse:.3e}, relative step {last_step:.3e})"
    )]
    FitFailure {
        iterations: usize,
        rmse: f64,
        last_step: f64,
    },

    #[error("hematocrit {target}% is outside the curve range [{min}%, {max}%]; extrapolation is not permitted")]
    Extrapolation { target: f64, min: f64, max: f64 },

    #[error("invalid shear-rate range: gamma0 = {gamma0}, gamma1 = {gamma1}")]
    InvalidRange { gamma0: f64, gamma1: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("segment labeling failed: {0}")]
    Labeling(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("cross-section is empty: {0}")]
    EmptySection(String),

    #[error("velocity series error: {0}")]
    Series(String),

    #[error("infeasible sequence: {0}")]
    InfeasibleSequence(String),

    #[error("vertex {vertex} at {position:?} lies outside the voxel grid")]
    OutOfBounds { vertex: usize, position: [f64; 3] },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.to_string(),
        }
    }

    /// Tags an error with the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True for failures of a numerical procedure, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::FitFailure { .. } | Error::DegenerateGeometry(_) | Error::InfeasibleSequence(_) => true,
            Error::Stage { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
