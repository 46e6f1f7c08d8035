use std::fmt;

use thiserror::Error;

/// Where a non-finite value was found while ingesting a container.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorLocation {
    Patch { frame: usize, patch: usize, channel: usize },
    Cls { frame: usize, layer: usize, channel: usize },
    Flat { row: usize, col: usize },
}

impl fmt::Display for TensorLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TensorLocation::Patch { frame, patch, channel } => {
                write!(f, "patch_tokens[t={frame}, n={patch}, c={channel}]")
            }
            TensorLocation::Cls { frame, layer, channel } => {
                write!(f, "cls_tokens[t={frame}, layer={layer}, c={channel}]")
            }
            TensorLocation::Flat { row, col } => write!(f, "[row={row}, col={col}]"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{frames} frames cannot be split into {segments} equal segments")]
    SNotDividingT { frames: usize, segments: usize },
    #[error("{heads} heads do not divide feature dimension {dim}")]
    CNotDividingD { heads: usize, dim: usize },
    #[error("{tokens_per_segment} tokens per segment exceeds the {available} tokens in a segment")]
    MTooLarge { tokens_per_segment: usize, available: usize },
    #[error("{global_layers} global layers requested but only {stored} stored")]
    ETooLarge { global_layers: usize, stored: usize },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("bad magic {found:?}, expected {expected:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("unsupported container version {0}")]
    UnsupportedVersion(u16),
    #[error("unsupported dtype code {0}")]
    UnsupportedDtype(u8),
    #[error("reserved header flags set: {0:#x}")]
    ReservedFlags(u32),
    #[error("payload is {actual} bytes, header implies {expected}")]
    TruncatedPayload { expected: u128, actual: u128 },
    #[error("non-finite value at {0}")]
    NonFiniteValue(TensorLocation),

    #[error("head {head} has zero norm, cosine undefined")]
    ZeroNormHead { head: usize },
    #[error("oracle guard: {tokens} tokens exceeds limit {limit}")]
    InputTooLargeForOracle { tokens: usize, limit: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("segment mismatch: {0}")]
    SegmentMismatch(String),
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable name, used by the CLI's `ERROR <code>:` lines.
    pub fn code(&self) -> &'static str {
        match self {
            Error::SNotDividingT { .. } => "SNotDividingT",
            Error::CNotDividingD { .. } => "CNotDividingD",
            Error::MTooLarge { .. } => "MTooLarge",
            Error::ETooLarge { .. } => "ETooLarge",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::InvalidSpec(_) => "InvalidSpec",
            Error::InvalidShape(_) => "InvalidShape",
            Error::BadMagic { .. } => "BadMagic",
            Error::UnsupportedVersion(_) => "UnsupportedVersion",
            Error::UnsupportedDtype(_) => "UnsupportedDtype",
            Error::ReservedFlags(_) => "ReservedFlags",
            Error::TruncatedPayload { .. } => "TruncatedPayload",
            Error::NonFiniteValue(_) => "NonFiniteValue",
            Error::ZeroNormHead { .. } => "ZeroNormHead",
            Error::InputTooLargeForOracle { .. } => "InputTooLargeForOracle",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::SegmentMismatch(_) => "SegmentMismatch",
            Error::Precondition(_) => "Precondition",
            Error::Io(_) => "Io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
