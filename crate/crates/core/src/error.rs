use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("non-binary label value {value} at index {index}")]
    NonBinaryLabel { index: usize, value: f64 },
    #[error("pixel value {value} at index {index} outside [0, 1]")]
    PixelOutOfRange { index: usize, value: f64 },
    #[error("image dimensions differ: {a:?} vs {b:?}")]
    DimensionMismatch {
        a: (usize, usize),
        b: (usize, usize),
    },
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("not a binary PPM (expected magic \"P6\")")]
    BadMagic,
    #[error("malformed PPM header: {0}")]
    BadHeader(String),
    #[error("unsupported PPM maxval {0} (only 255 is accepted)")]
    UnsupportedMaxval(u32),
    #[error("truncated pixel data: expected {expected} bytes, found {found}")]
    TruncatedPixelData { expected: usize, found: usize },

    #[error("line {line}: expected {expected} columns, found {found}")]
    RaggedRows {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("manifest is missing its \"#classes=C\" header line")]
    MissingClassHeader,
    #[error("label index {index} out of range for {classes} classes")]
    IndexOutOfRange { index: usize, classes: usize },
    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("pooling grid {grid:?} larger than image {image:?}")]
    GridTooLarge {
        grid: (usize, usize),
        image: (usize, usize),
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("failed to load {path}: {message}")]
    DataLoad { path: PathBuf, message: String },
    #[error("training diverged: mean loss at epoch {epoch} is {loss}")]
    DivergedLoss { epoch: usize, loss: f64 },

    #[error("k = {k} exceeds the number of classes {classes}")]
    KTooLarge { k: usize, classes: usize },
    #[error("average precision is undefined without positives")]
    NoPositives,
    #[error("no class has a positive example; mAP is undefined")]
    AllClassesEmpty,
    #[error("empty input")]
    EmptyInput,

    #[error("synthetic generation failed: {0}")]
    Generation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
