//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: shape mismatch, {lhs_rows}x{lhs_cols} vs {rhs_rows}x{rhs_cols}")]
    ShapeMismatch {
        op: &'static str,
        lhs_rows: usize,
        lhs_cols: usize,
        rhs_rows: usize,
        rhs_cols: usize,
    },

    #[error("invalid mask spec: {0}")]
    InvalidMask(String),

    /// Width of a segment does not match what the layer stack consumes.
    #[error("segment width q={found}, model requires {required} (frames consumed by layers: {consumed}, extra frames k: {extra})")]
    SegmentWidth {
        found: usize,
        required: usize,
        consumed: usize,
        extra: usize,
    },

    #[error("clip '{clip_id}' has {frames} frames, segmentation needs at least {required}")]
    ClipTooShort {
        clip_id: String,
        frames: usize,
        required: usize,
    },

    #[error("{0} must not be empty")]
    EmptyInput(&'static str),

    #[error("class label {label} out of range for {classes} classes")]
    ClassOutOfRange { label: usize, classes: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
