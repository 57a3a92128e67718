use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("identity {identity} assigned to both {first} and {second} splits")]
    SplitViolation {
        identity: String,
        first: String,
        second: String,
    },

    #[error("record {clip_id} references unknown identity {identity}")]
    DanglingIdentity { clip_id: String, identity: String },

    #[error("duplicate clip id {0}")]
    DuplicateClip(String),

    #[error("empty split: {0}")]
    EmptySplit(String),

    #[error("bad magic bytes in {0}")]
    BadMagic(String),

    #[error("unsupported format version {found} (expected {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("non-finite value at {0}")]
    NonFinite(String),

    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    #[error("landmark index {index} out of range for {count} landmarks")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("role landmark {role} (index {index}) is not in the kept subset")]
    RoleNotKept { role: &'static str, index: usize },

    #[error("degenerate frame {frame}: intercanthal distance {distance:e}")]
    DegenerateFrame { frame: usize, distance: f64 },

    #[error("triangulation needs at least 3 points, got {0}")]
    TooFewPoints(usize),

    #[error("all points are collinear")]
    Collinear,

    #[error("duplicate points at indices {0} and {1}")]
    DuplicatePoints(usize, usize),

    #[error("frame {frame}: {source}")]
    Frame {
        frame: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("zero-norm embedding")]
    ZeroNorm,

    #[error("cannot sample triplets: {0}")]
    ImpossibleTriplets(String),

    #[error("non-finite loss at epoch {epoch}, batch {batch}, triplet ({anchor}, {positive}, {negative})")]
    NonFiniteLoss {
        epoch: usize,
        batch: usize,
        anchor: String,
        positive: String,
        negative: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown clip {0}")]
    UnknownClip(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }

    pub(crate) fn in_frame(self, frame: usize) -> Self {
        Error::Frame {
            frame,
            source: Box::new(self),
        }
    }
}
