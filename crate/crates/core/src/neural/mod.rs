//! Dense-network building blocks with hand-written backward passes.
//!
//! Everything here runs in `f64`. Each differentiable op exposes a forward
//! function that returns whatever the backward pass needs, and a backward
//! function that returns exact analytic gradients.

mod activation;
mod batchnorm;
mod dense;
mod init;
mod loss;
mod mlp;
mod optim;

pub use activation::{leaky_relu, leaky_relu_backward, Dropout, LEAKY_SLOPE};
pub use batchnorm::{BatchNorm, BatchNormCache, BatchNormGrads, BN_EPS, BN_MOMENTUM};
pub use dense::{Dense, DenseGrads};
pub use init::he_init;
pub use loss::mse_loss;
pub use mlp::{HiddenBlock, Mlp, MlpCache, MlpGrads};
pub use optim::{AmsGrad, MomentState};

use thiserror::Error;

/// Whether a forward pass is part of training or inference.
///
/// `Train` uses batch statistics and draws dropout masks; `Infer` uses the
/// running statistics and disables dropout.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

#[derive(Debug, Error, PartialEq)]
pub enum NeuralError {
    #[error("shape mismatch in {context}: expected {expected}, found {found}")]
    ShapeMismatch {
        context: &'static str,
        expected: String,
        found: String,
    },
    #[error("batch normalization in training mode needs at least 2 rows, got {0}")]
    BatchTooSmall(usize),
    #[error("length mismatch: predictions have {pred} entries, targets have {target}")]
    LengthMismatch { pred: usize, target: usize },
    #[error("empty input")]
    EmptyInput,
}

pub(crate) fn shape_err(
    context: &'static str,
    expected: impl ToString,
    found: impl ToString,
) -> NeuralError {
    NeuralError::ShapeMismatch {
        context,
        expected: expected.to_string(),
        found: found.to_string(),
    }
}
