use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid polynomial: {0}")]
    InvalidPolynomial(String),

    #[error("LFSR register is all zero; the recurrence would stay locked at zero")]
    ZeroRegister,

    #[error("register length {got} does not match polynomial degree {expected}")]
    RegisterLength { expected: usize, got: usize },

    #[error("polynomial {0} is not primitive (generated sequence is not balanced)")]
    NotPrimitive(String),

    #[error("sequence orders differ: {0} vs {1}")]
    OrderMismatch(u32, u32),

    #[error("geometry {m}x{n} does not hold {len} pixels")]
    GeometryMismatch { m: usize, n: usize, len: usize },

    #[error("{0}")]
    InvalidGeometry(String),

    #[error("index {index} out of range 1..={max}")]
    OutOfRange { index: usize, max: usize },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("no measurements (K = 0)")]
    EmptyMeasurements,

    #[error("noise has already been applied to this bucket series")]
    NoiseAlreadyApplied,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("characteristic matrix has zero norm")]
    ZeroNorm,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("missing prerequisite: {0}")]
    MissingArtifact(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the CLI: 2 for I/O failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::MissingArtifact(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
