//! Training, metrics, and the evaluation protocols: repeated random-split
//! cross-validation and cross-city transfer with a per-residence
//! fine-tuning budget.

mod experiments;
mod metrics;
mod train;

pub use experiments::{
    derive_seed, fine_tune, fit_model, monte_carlo_cv, run_transfer_experiment,
    sample_k_per_residence, transfer_from_checkpoint, transfer_split, CvReport, TransferOptions,
    TransferReport, TEST_FRACTION,
};
pub use metrics::{evaluate, metrics_from, MetricsReport};
pub use train::{train, Tier, TrainConfig, DEFAULT_EPOCHS};

use thiserror::Error;

use crate::encode::EncodeError;
use crate::ingest::IngestError;
use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("dataset has {0} rows; training needs at least 2")]
    EmptyDataset(usize),
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("loss became non-finite in epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("need at least 2 samples to evaluate, got {0}")]
    TooFewSamples(usize),
    #[error("targets have zero variance; R² is undefined")]
    ZeroVarianceTargets,
    #[error("fine-tuning set is empty")]
    FineTuneSetEmpty,
    #[error("test set needs {needed} records but only {available} remain after sampling")]
    InsufficientTestRecords { needed: usize, available: usize },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl From<crate::neural::NeuralError> for ProtocolError {
    fn from(e: crate::neural::NeuralError) -> Self {
        ProtocolError::Model(e.into())
    }
}
