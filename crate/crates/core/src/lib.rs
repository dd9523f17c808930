//! Conditional neural network (CLNN) and masked conditional neural network
//! (MCLNN) layers for time-frequency representations, together with the
//! plumbing needed to train and evaluate them: a small dense linear-algebra
//! substrate, binary filterbank-like weight masks, an ADAM trainer with a
//! finite-difference gradient auditor, feature ingestion and segmentation,
//! and a k-fold cross-validation driver with clip-level probability voting.
//!
//! All numeric code is generic over the scalar type through [`Scalar`];
//! the concrete aliases at the crate root fix the default `f64` precision
//! used by the CLI and the on-disk formats.

pub mod data;
pub mod error;
pub mod eval;
pub mod layers;
pub mod mask;
pub mod model;
pub mod numerics;
pub mod scalar;
pub mod training;

pub use error::{Error, Result};
pub use mask::{build_mask, BinaryMask, MaskSpec};
pub use model::{LayerKind, LayerSpec, Model, ModelConfig};
pub use numerics::{Matrix, SeededRng};
pub use scalar::Scalar;

/// Default-precision aliases; the CLI and file formats work in `f64`.
pub type Matrix64 = Matrix<f64>;
pub type Matrix32 = Matrix<f32>;
pub type Model64 = Model<f64>;
pub type Model32 = Model<f32>;
