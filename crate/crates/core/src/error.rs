use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("truncated depth file: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },

    #[error("depth file size mismatch: header implies {expected} bytes, file has {found}")]
    SizeMismatch { expected: u64, found: u64 },

    #[error("invalid depth header: {0}")]
    BadHeader(String),

    #[error("depth sequence has zero frames")]
    ZeroFrames,

    #[error("malformed sample name {name:?}: bad {segment} segment")]
    SampleName { name: String, segment: &'static str },

    #[error("duplicate sample {0}")]
    DuplicateSample(String),

    #[error("label mapping has no entry for source {source_tag:?} action {action}")]
    MappingGap { source_tag: String, action: u32 },

    #[error("label mapping line {line}: {reason}")]
    MappingSyntax { line: usize, reason: String },

    #[error("remapped labels are not contiguous from 1: {0:?}")]
    NonContiguousLabels(Vec<u32>),

    #[error("no convention-named depth files under {0}")]
    EmptyDirectory(PathBuf),

    #[error("subject {0} is in neither the train nor the test list")]
    UnassignedSubject(u32),

    #[error("invalid split rule: {0}")]
    InvalidSplit(String),

    #[error("manifest file: {0}")]
    Manifest(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("sequence of {frames} frames is too short for temporal scale {scale}")]
    EmptyScale { frames: usize, scale: usize },

    #[error("no requested temporal scale fits a sequence of {frames} frames")]
    AllScalesEmpty { frames: usize },

    #[error("empty map grid")]
    EmptyGrid,

    #[error("crop {crop} exceeds image {width}x{height}")]
    CropTooLarge { crop: usize, width: usize, height: usize },

    #[error("training set has no example of class {0}")]
    MissingClass(usize),

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("model blob: {0}")]
    ModelFormat(String),

    #[error("cannot fuse an empty score list")]
    EmptyFusion,

    #[error("class count mismatch: expected {expected}, got {got}")]
    ClassCountMismatch { expected: usize, got: usize },

    #[error("plane fusion needs exactly one score per plane: {0}")]
    MissingPlane(String),

    #[error("config: {0}")]
    Config(String),

    #[error("image: {0}")]
    Image(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerics rather than of the input data.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Divergence { .. })
    }
}
