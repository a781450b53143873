use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the sampler stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("quaternion norm {0:e} is too small to normalize")]
    DegenerateQuaternion(f64),

    #[error("relative rotation is on the canonicalization boundary (w = {0:e})")]
    CanonicalBoundary(f64),

    #[error("requested {requested} demonstrated grasps but only {available} seeds were given")]
    NotEnoughSeeds { requested: usize, available: usize },

    #[error("only {succeeded} of the {requested} requested demonstrated grasps reached the success threshold")]
    DemoGenerationFailed { requested: usize, succeeded: usize },

    #[error("sketch construction gave up after {draws} draws: {reason}")]
    SketchExhausted { draws: usize, reason: String },

    #[error("unknown target `{name}` (available: {available})")]
    UnknownTarget { name: String, available: String },

    #[error("config key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {reason}")]
    Parse { path: PathBuf, reason: String },

    #[error("run (bias={bias}, c={c}, seed={seed}) failed: {source}")]
    Run {
        bias: String,
        c: f64,
        seed: u64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
