use std::path::PathBuf;

/// Errors produced by the flow library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported or corrupt image {path}: {reason}")]
    ImageFormat { path: PathBuf, reason: String },

    #[error("image has a zero dimension: {width}x{height}")]
    ZeroDimension { width: usize, height: usize },

    #[error("dimension mismatch: {expected} vs {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("{name} must be {constraint} (got {value})")]
    InvalidParameter {
        name: &'static str,
        constraint: &'static str,
        value: f64,
    },

    #[error("weight table too short: need {needed}, have {have}")]
    InsufficientWeights { needed: usize, have: usize },

    #[error("non-finite value encountered in {context}")]
    NonFinite { context: &'static str },

    #[error("bad magic in flow file {path}: expected 202021.25, got {got}")]
    BadMagic { path: PathBuf, got: f32 },

    #[error("truncated flow file {path}: expected {expected} bytes of payload, got {got}")]
    TruncatedFlo {
        path: PathBuf,
        expected: usize,
        got: usize,
    },

    #[error("implausible flow dimensions {width}x{height} in {path}")]
    FloDimensions {
        path: PathBuf,
        width: i32,
        height: i32,
    },

    #[error("region ({x0},{y0})-({x1},{y1}) is invalid for a {width}x{height} field")]
    InvalidRegion {
        x0: usize,
        y0: usize,
        x1: usize,
        y1: usize,
        width: usize,
        height: usize,
    },

    #[error("no valid ground-truth pixels in the evaluated region")]
    EmptyValidSet,
}

pub type Result<T> = std::result::Result<T, Error>;
