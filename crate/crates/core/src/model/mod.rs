//! The two-part appraisal network, the single-stack baseline, backbone
//! transfer and checkpoints.

mod checkpoint;

pub use checkpoint::{load_checkpoint, ModelCheckpoint, TrainingMeta, CHECKPOINT_VERSION};

use std::fmt;

use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encode::{decode_target, encode_features, EncodeError};
use crate::ingest::PropertyRecord;
use crate::neural::{Mlp, MlpCache, MlpGrads, Mode, NeuralError};

/// Hidden widths of the transferable property-feature network.
pub const BACKBONE_WIDTHS: [usize; 5] = [200, 100, 50, 20, 10];
/// Hidden widths of the per-city location head.
pub const HEAD_WIDTHS: [usize; 4] = [100, 50, 20, 10];
/// Hidden widths of the single-stack baseline.
pub const TRADITIONAL_WIDTHS: [usize; 5] = BACKBONE_WIDTHS;
pub const DROPOUT_RATE: f64 = 0.5;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("input dimensions must be at least 1 (homogeneous {homogeneous}, heterogeneous {heterogeneous})")]
    BadDim {
        homogeneous: usize,
        heterogeneous: usize,
    },
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error("expected a {expected} model, found {found}")]
    KindMismatch { expected: ModelKind, found: ModelKind },
    #[error("checkpoint I/O failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("unsupported checkpoint version {found} (supported: {supported})")]
    VersionMismatch { found: i64, supported: i64 },
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),
    #[error(transparent)]
    Encode(#[from] EncodeError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "hft_hlf")]
    HftHlf,
    #[serde(rename = "traditional")]
    Traditional,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::HftHlf => "hft_hlf",
            ModelKind::Traditional => "traditional",
        })
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hft_hlf" => Ok(ModelKind::HftHlf),
            "traditional" => Ok(ModelKind::Traditional),
            other => Err(format!("unknown model kind `{other}`")),
        }
    }
}

/// Backbone over the homogeneous block; head over
/// `[backbone output | heterogeneous block]` ending in one linear unit.
#[derive(Clone, Debug, PartialEq)]
pub struct HftHlfModel {
    pub backbone: Mlp,
    pub head: Mlp,
    /// When set, training leaves the backbone (parameters and running
    /// statistics) untouched and runs it in inference mode.
    pub backbone_frozen: bool,
}

impl HftHlfModel {
    pub fn build<R: Rng + ?Sized>(
        homogeneous_dim: usize,
        heterogeneous_dim: usize,
        rng: &mut R,
    ) -> Result<Self, ModelError> {
        Self::with_widths(
            homogeneous_dim,
            heterogeneous_dim,
            &BACKBONE_WIDTHS,
            &HEAD_WIDTHS,
            DROPOUT_RATE,
            rng,
        )
    }

    pub fn with_widths<R: Rng + ?Sized>(
        homogeneous_dim: usize,
        heterogeneous_dim: usize,
        backbone_widths: &[usize],
        head_widths: &[usize],
        dropout: f64,
        rng: &mut R,
    ) -> Result<Self, ModelError> {
        if homogeneous_dim == 0 || heterogeneous_dim == 0 || backbone_widths.is_empty() {
            return Err(ModelError::BadDim {
                homogeneous: homogeneous_dim,
                heterogeneous: heterogeneous_dim,
            });
        }
        let backbone = Mlp::new(homogeneous_dim, backbone_widths, false, dropout, rng);
        let head = Mlp::new(
            backbone.out_dim() + heterogeneous_dim,
            head_widths,
            true,
            dropout,
            rng,
        );
        Ok(Self {
            backbone,
            head,
            backbone_frozen: false,
        })
    }

    pub fn homogeneous_dim(&self) -> usize {
        self.backbone.in_dim()
    }

    pub fn representation_dim(&self) -> usize {
        self.backbone.out_dim()
    }

    pub fn heterogeneous_dim(&self) -> usize {
        self.head.in_dim() - self.representation_dim()
    }

    pub fn param_count(&self) -> usize {
        self.backbone.param_count() + self.head.param_count()
    }
}

/// One hidden stack over `[homogeneous | heterogeneous]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TraditionalModel {
    pub stack: Mlp,
    pub homogeneous_dim: usize,
}

impl TraditionalModel {
    pub fn build<R: Rng + ?Sized>(
        homogeneous_dim: usize,
        heterogeneous_dim: usize,
        rng: &mut R,
    ) -> Result<Self, ModelError> {
        Self::with_widths(
            homogeneous_dim,
            heterogeneous_dim,
            &TRADITIONAL_WIDTHS,
            DROPOUT_RATE,
            rng,
        )
    }

    pub fn with_widths<R: Rng + ?Sized>(
        homogeneous_dim: usize,
        heterogeneous_dim: usize,
        widths: &[usize],
        dropout: f64,
        rng: &mut R,
    ) -> Result<Self, ModelError> {
        if homogeneous_dim == 0 || heterogeneous_dim == 0 {
            return Err(ModelError::BadDim {
                homogeneous: homogeneous_dim,
                heterogeneous: heterogeneous_dim,
            });
        }
        Ok(Self {
            stack: Mlp::new(homogeneous_dim + heterogeneous_dim, widths, true, dropout, rng),
            homogeneous_dim,
        })
    }

    pub fn heterogeneous_dim(&self) -> usize {
        self.stack.in_dim() - self.homogeneous_dim
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Network {
    HftHlf(HftHlfModel),
    Traditional(TraditionalModel),
}

pub struct NetworkCache {
    backbone: Option<MlpCache>,
    main: MlpCache,
}

/// Gradients for every trainable tensor; the backbone entry is `None` when
/// it is frozen or absent.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkGrads {
    pub backbone: Option<MlpGrads>,
    pub main: MlpGrads,
}

impl NetworkGrads {
    /// Same order as [`Network::trainable_params_mut`].
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = self.backbone.as_ref().map(MlpGrads::slices).unwrap_or_default();
        out.extend(self.main.slices());
        out
    }
}

fn check_rows(homogeneous: &ArrayView2<'_, f64>, heterogeneous: &ArrayView2<'_, f64>) -> Result<(), ModelError> {
    if homogeneous.nrows() != heterogeneous.nrows() {
        return Err(NeuralError::ShapeMismatch {
            context: "batch row counts",
            expected: homogeneous.nrows().to_string(),
            found: heterogeneous.nrows().to_string(),
        }
        .into());
    }
    Ok(())
}

fn join(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Array2<f64> {
    concatenate(Axis(1), &[a, b]).expect("row counts checked")
}

impl Network {
    pub fn kind(&self) -> ModelKind {
        match self {
            Network::HftHlf(_) => ModelKind::HftHlf,
            Network::Traditional(_) => ModelKind::Traditional,
        }
    }

    pub fn build<R: Rng + ?Sized>(
        kind: ModelKind,
        homogeneous_dim: usize,
        heterogeneous_dim: usize,
        rng: &mut R,
    ) -> Result<Self, ModelError> {
        Ok(match kind {
            ModelKind::HftHlf => Network::HftHlf(HftHlfModel::build(homogeneous_dim, heterogeneous_dim, rng)?),
            ModelKind::Traditional => {
                Network::Traditional(TraditionalModel::build(homogeneous_dim, heterogeneous_dim, rng)?)
            }
        })
    }

    pub fn homogeneous_dim(&self) -> usize {
        match self {
            Network::HftHlf(m) => m.homogeneous_dim(),
            Network::Traditional(m) => m.homogeneous_dim,
        }
    }

    pub fn heterogeneous_dim(&self) -> usize {
        match self {
            Network::HftHlf(m) => m.heterogeneous_dim(),
            Network::Traditional(m) => m.heterogeneous_dim(),
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Network::HftHlf(m) => m.param_count(),
            Network::Traditional(m) => m.stack.param_count(),
        }
    }

    /// Sets the dropout rate of every hidden block.
    pub fn set_dropout(&mut self, rate: f64) {
        let d = crate::neural::Dropout::new(rate);
        match self {
            Network::HftHlf(m) => {
                m.backbone.dropout = d;
                m.head.dropout = d;
            }
            Network::Traditional(m) => m.stack.dropout = d,
        }
    }

    /// Predictions of shape `(rows, 1)` plus what [`Network::backward`] needs.
    ///
    /// A frozen backbone always runs in inference mode.
    pub fn forward<R: Rng + ?Sized>(
        &mut self,
        homogeneous: ArrayView2<'_, f64>,
        heterogeneous: ArrayView2<'_, f64>,
        mode: Mode,
        rng: &mut R,
    ) -> Result<(Array2<f64>, NetworkCache), ModelError> {
        check_rows(&homogeneous, &heterogeneous)?;
        match self {
            Network::HftHlf(m) => {
                let (rep, backbone_cache) = if m.backbone_frozen {
                    (m.backbone.infer(homogeneous)?, None)
                } else {
                    let (rep, c) = m.backbone.forward(homogeneous, mode, rng)?;
                    (rep, Some(c))
                };
                let joined = join(rep.view(), heterogeneous);
                let (y, head_cache) = m.head.forward(joined.view(), mode, rng)?;
                Ok((
                    y,
                    NetworkCache {
                        backbone: backbone_cache,
                        main: head_cache,
                    },
                ))
            }
            Network::Traditional(m) => {
                let joined = join(homogeneous, heterogeneous);
                let (y, cache) = m.stack.forward(joined.view(), mode, rng)?;
                Ok((
                    y,
                    NetworkCache {
                        backbone: None,
                        main: cache,
                    },
                ))
            }
        }
    }

    pub fn backward(&self, cache: &NetworkCache, upstream: ArrayView2<'_, f64>) -> Result<NetworkGrads, ModelError> {
        match self {
            Network::HftHlf(m) => {
                let (g_joined, head) = m.head.backward(&cache.main, upstream)?;
                let backbone = match &cache.backbone {
                    Some(bc) if !m.backbone_frozen => {
                        let g_rep = g_joined.slice(s![.., ..m.representation_dim()]);
                        Some(m.backbone.backward(bc, g_rep)?.1)
                    }
                    _ => None,
                };
                Ok(NetworkGrads { backbone, main: head })
            }
            Network::Traditional(m) => Ok(NetworkGrads {
                backbone: None,
                main: m.stack.backward(&cache.main, upstream)?.1,
            }),
        }
    }

    /// Flat views of every tensor the optimizer may update.
    pub fn trainable_params_mut(&mut self) -> Vec<&mut [f64]> {
        match self {
            Network::HftHlf(m) => {
                let mut out = if m.backbone_frozen {
                    Vec::new()
                } else {
                    m.backbone.params_mut()
                };
                out.extend(m.head.params_mut());
                out
            }
            Network::Traditional(m) => m.stack.params_mut(),
        }
    }

    /// Inference-mode predictions, one per row.
    pub fn predict(
        &self,
        homogeneous: ArrayView2<'_, f64>,
        heterogeneous: ArrayView2<'_, f64>,
    ) -> Result<Array1<f64>, ModelError> {
        check_rows(&homogeneous, &heterogeneous)?;
        let y = match self {
            Network::HftHlf(m) => {
                let rep = m.backbone.infer(homogeneous)?;
                m.head.infer(join(rep.view(), heterogeneous).view())?
            }
            Network::Traditional(m) => m.stack.infer(join(homogeneous, heterogeneous).view())?,
        };
        Ok(y.column(0).to_owned())
    }
}

/// A fresh HFT+HLF model for a target city: backbone copied bit-exactly
/// from `source` and frozen, head rebuilt for `target_heterogeneous_dim`
/// location slots with the source's head widths and dropout.
pub fn transfer_backbone<R: Rng + ?Sized>(
    source: &ModelCheckpoint,
    target_heterogeneous_dim: usize,
    rng: &mut R,
) -> Result<HftHlfModel, ModelError> {
    let Network::HftHlf(src) = &source.network else {
        return Err(ModelError::KindMismatch {
            expected: ModelKind::HftHlf,
            found: source.network.kind(),
        });
    };
    if target_heterogeneous_dim == 0 {
        return Err(ModelError::BadDim {
            homogeneous: src.homogeneous_dim(),
            heterogeneous: 0,
        });
    }
    let widths: Vec<usize> = src.head.blocks.iter().map(|b| b.dense.out_dim()).collect();
    let head = Mlp::new(
        src.representation_dim() + target_heterogeneous_dim,
        &widths,
        true,
        src.head.dropout.rate(),
        rng,
    );
    Ok(HftHlfModel {
        backbone: src.backbone.clone(),
        head,
        backbone_frozen: true,
    })
}

/// Prices per square metre for `records`, using the checkpoint's encoders.
pub fn predict_prices(checkpoint: &ModelCheckpoint, records: &[PropertyRecord]) -> Result<Vec<f64>, ModelError> {
    let (homogeneous, heterogeneous) =
        encode_features(records, &checkpoint.norm, &checkpoint.layout, &checkpoint.vocab);
    let t = checkpoint.network.predict(homogeneous.view(), heterogeneous.view())?;
    Ok(t.iter().map(|&v| decode_target(v, &checkpoint.norm)).collect())
}
