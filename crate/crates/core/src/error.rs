use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count {0} out of range 1..={max}", max = crate::qsim::MAX_QUBITS)]
    QubitCount(usize),
    #[error("amplitude vector length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("amplitude vector has zero norm")]
    ZeroVector,
    #[error("amplitude vector norm² {0} is not within 1e-6 of 1")]
    NotNormalized(f64),
    #[error("qubit index {index} out of range for {num_qubits}-qubit register")]
    QubitIndex { index: usize, num_qubits: usize },
    #[error("qubit {0} is used as both target and control")]
    ControlCollision(usize),
    #[error("shot count must be at least 1")]
    ZeroShots,
    #[error("basis index {index} out of range for {num_qubits}-qubit histogram")]
    BasisIndex { index: usize, num_qubits: usize },
    #[error("invalid image: {0}")]
    Image(String),
    #[error("pixel index {index} out of range for {pixels} pixels")]
    PixelIndex { index: usize, pixels: usize },
    #[error("unsupported layout: {0}")]
    Layout(String),
    #[error("invalid action: {0}")]
    Action(String),
    #[error("bad magic number {found:#010x} at offset {offset} (expected {expected:#010x})")]
    IdxMagic { offset: usize, found: u32, expected: u32 },
    #[error("truncated IDX file: need {needed} bytes, have {have}")]
    IdxTruncated { needed: usize, have: usize },
    #[error("image/label count mismatch: {images} images, {labels} labels")]
    IdxCountMismatch { images: usize, labels: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("forward pass was not recorded; backward needs a trace")]
    MissingTrace,
    #[error("replay buffer holds {have} transitions, batch needs {need}")]
    UnderfullBuffer { have: usize, need: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
