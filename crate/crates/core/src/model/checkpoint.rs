//! Self-describing JSON checkpoints.
//!
//! Layout of a `.hfthlf.json` document:
//!
//! ```text
//! version     integer, currently 1
//! kind        "hft_hlf" | "traditional"
//! dims        input widths, hidden widths, dropout, frozen flag
//! layers      dense layers in forward order: name, rows, cols,
//!             row-major weight, bias
//! batchnorm   one entry per hidden block: gamma, beta, running stats
//! norm_stats  numeric-field and log-target statistics
//! vocab       location vocabulary of the city the head was fitted on
//! layout      slot order of both encoded blocks
//! meta        seed, epochs, learning rate, batch size, city names
//! ```
//!
//! Floats are written as shortest round-trip decimals, so a reload restores
//! every parameter bit for bit.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{HftHlfModel, ModelError, ModelKind, Network, TraditionalModel};
use crate::encode::{FeatureLayout, NormStats};
use crate::ingest::CityVocabulary;
use crate::neural::{BatchNorm, Dense, Dropout, HiddenBlock, Mlp};

pub const CHECKPOINT_VERSION: i64 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: u64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// City whose data trained the backbone (or the whole baseline).
    pub source_city: String,
    /// City whose locations the head encodes.
    pub city: String,
}

/// A trained network together with everything needed to encode inputs
/// for it.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelCheckpoint {
    pub network: Network,
    pub norm: NormStats,
    pub vocab: CityVocabulary,
    pub layout: FeatureLayout,
    pub meta: TrainingMeta,
}

#[derive(Serialize, Deserialize)]
struct Dims {
    homogeneous: usize,
    heterogeneous: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    backbone: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    head: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hidden: Option<Vec<usize>>,
    dropout: f64,
    #[serde(default)]
    backbone_frozen: bool,
}

#[derive(Serialize, Deserialize)]
struct LayerRecord {
    name: String,
    rows: usize,
    cols: usize,
    weight: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct BatchNormRecord {
    name: String,
    gamma: Vec<f64>,
    beta: Vec<f64>,
    running_mean: Vec<f64>,
    running_var: Vec<f64>,
    momentum: f64,
    eps: f64,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    version: i64,
    kind: ModelKind,
    dims: Dims,
    layers: Vec<LayerRecord>,
    batchnorm: Vec<BatchNormRecord>,
    norm_stats: NormStats,
    vocab: CityVocabulary,
    layout: FeatureLayout,
    meta: TrainingMeta,
}

fn widths(mlp: &Mlp) -> Vec<usize> {
    mlp.blocks.iter().map(|b| b.dense.out_dim()).collect()
}

fn dense_record(name: String, d: &Dense) -> LayerRecord {
    LayerRecord {
        name,
        rows: d.out_dim(),
        cols: d.in_dim(),
        weight: d.weight.iter().copied().collect(),
        bias: d.bias.to_vec(),
    }
}

fn push_mlp(prefix: &str, mlp: &Mlp, layers: &mut Vec<LayerRecord>, norms: &mut Vec<BatchNormRecord>) {
    for (i, b) in mlp.blocks.iter().enumerate() {
        let name = format!("{prefix}.{i}");
        layers.push(dense_record(name.clone(), &b.dense));
        norms.push(BatchNormRecord {
            name,
            gamma: b.norm.gamma.to_vec(),
            beta: b.norm.beta.to_vec(),
            running_mean: b.norm.running_mean.to_vec(),
            running_var: b.norm.running_var.to_vec(),
            momentum: b.norm.momentum,
            eps: b.norm.eps,
        });
    }
    if let Some(o) = &mlp.output {
        layers.push(dense_record(format!("{prefix}.output"), o));
    }
}

fn corrupt(msg: impl Into<String>) -> ModelError {
    ModelError::CorruptCheckpoint(msg.into())
}

/// Rebuilds one stack, consuming its records from the front of the lists.
struct Reader<'a> {
    layers: std::slice::Iter<'a, LayerRecord>,
    norms: std::slice::Iter<'a, BatchNormRecord>,
}

impl Reader<'_> {
    fn dense(&mut self, name: &str, rows: usize, cols: usize) -> Result<Dense, ModelError> {
        let rec = self
            .layers
            .next()
            .ok_or_else(|| corrupt(format!("missing layer {name}")))?;
        if rec.name != name || rec.rows != rows || rec.cols != cols {
            return Err(corrupt(format!(
                "layer {} ({}x{}) where {name} ({rows}x{cols}) was expected",
                rec.name, rec.rows, rec.cols
            )));
        }
        let weight = Array2::from_shape_vec((rows, cols), rec.weight.clone())
            .map_err(|_| corrupt(format!("layer {name}: weight has {} values", rec.weight.len())))?;
        if rec.bias.len() != rows {
            return Err(corrupt(format!("layer {name}: bias has {} values", rec.bias.len())));
        }
        Ok(Dense::new(weight, Array1::from(rec.bias.clone()))?)
    }

    fn norm(&mut self, name: &str, features: usize) -> Result<BatchNorm, ModelError> {
        let rec = self
            .norms
            .next()
            .ok_or_else(|| corrupt(format!("missing batch norm {name}")))?;
        let lens = [rec.gamma.len(), rec.beta.len(), rec.running_mean.len(), rec.running_var.len()];
        if rec.name != name || lens.iter().any(|&l| l != features) {
            return Err(corrupt(format!("batch norm {} does not match {name}", rec.name)));
        }
        Ok(BatchNorm {
            gamma: Array1::from(rec.gamma.clone()),
            beta: Array1::from(rec.beta.clone()),
            running_mean: Array1::from(rec.running_mean.clone()),
            running_var: Array1::from(rec.running_var.clone()),
            momentum: rec.momentum,
            eps: rec.eps,
        })
    }

    fn mlp(&mut self, prefix: &str, in_dim: usize, widths: &[usize], output: bool, dropout: f64) -> Result<Mlp, ModelError> {
        let mut blocks = Vec::with_capacity(widths.len());
        let mut fan_in = in_dim;
        for (i, &w) in widths.iter().enumerate() {
            let name = format!("{prefix}.{i}");
            blocks.push(HiddenBlock {
                dense: self.dense(&name, w, fan_in)?,
                norm: self.norm(&name, w)?,
            });
            fan_in = w;
        }
        let output = if output {
            Some(self.dense(&format!("{prefix}.output"), 1, fan_in)?)
        } else {
            None
        };
        Ok(Mlp {
            blocks,
            output,
            dropout: Dropout::new(dropout),
        })
    }
}

impl ModelCheckpoint {
    /// Consistency between the network's input widths and the encoders.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.layout.homogeneous_dim() != self.network.homogeneous_dim() {
            return Err(corrupt(format!(
                "layout has {} homogeneous slots, network expects {}",
                self.layout.homogeneous_dim(),
                self.network.homogeneous_dim()
            )));
        }
        if self.vocab.location_dim() != self.network.heterogeneous_dim()
            || self.layout.districts != self.vocab.districts
            || self.layout.residences != self.vocab.residences
        {
            return Err(corrupt("location vocabulary does not match layout or network"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String, ModelError> {
        let mut layers = Vec::new();
        let mut batchnorm = Vec::new();
        let dims = match &self.network {
            Network::HftHlf(m) => {
                push_mlp("backbone", &m.backbone, &mut layers, &mut batchnorm);
                push_mlp("head", &m.head, &mut layers, &mut batchnorm);
                Dims {
                    homogeneous: m.homogeneous_dim(),
                    heterogeneous: m.heterogeneous_dim(),
                    backbone: Some(widths(&m.backbone)),
                    head: Some(widths(&m.head)),
                    hidden: None,
                    dropout: m.head.dropout.rate(),
                    backbone_frozen: m.backbone_frozen,
                }
            }
            Network::Traditional(m) => {
                push_mlp("hidden", &m.stack, &mut layers, &mut batchnorm);
                Dims {
                    homogeneous: m.homogeneous_dim,
                    heterogeneous: m.heterogeneous_dim(),
                    backbone: None,
                    head: None,
                    hidden: Some(widths(&m.stack)),
                    dropout: m.stack.dropout.rate(),
                    backbone_frozen: false,
                }
            }
        };
        let file = CheckpointFile {
            version: CHECKPOINT_VERSION,
            kind: self.network.kind(),
            dims,
            layers,
            batchnorm,
            norm_stats: self.norm.clone(),
            vocab: self.vocab.clone(),
            layout: self.layout.clone(),
            meta: self.meta.clone(),
        };
        serde_json::to_string_pretty(&file).map_err(|e| corrupt(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| corrupt(e.to_string()))?;
        let version = value
            .get("version")
            .and_then(serde_json::Value::as_i64)
            .ok_or_else(|| corrupt("missing integer `version`"))?;
        if version != CHECKPOINT_VERSION {
            return Err(ModelError::VersionMismatch {
                found: version,
                supported: CHECKPOINT_VERSION,
            });
        }
        let file: CheckpointFile = serde_json::from_value(value).map_err(|e| corrupt(e.to_string()))?;
        let d = &file.dims;
        if !(0.0..1.0).contains(&d.dropout) {
            return Err(corrupt(format!("dropout rate {} outside [0, 1)", d.dropout)));
        }
        let mut reader = Reader {
            layers: file.layers.iter(),
            norms: file.batchnorm.iter(),
        };
        let network = match file.kind {
            ModelKind::HftHlf => {
                let (Some(bw), Some(hw)) = (&d.backbone, &d.head) else {
                    return Err(corrupt("hft_hlf dims need `backbone` and `head` widths"));
                };
                let rep = *bw.last().ok_or_else(|| corrupt("empty backbone"))?;
                let backbone = reader.mlp("backbone", d.homogeneous, bw, false, d.dropout)?;
                let head = reader.mlp("head", rep + d.heterogeneous, hw, true, d.dropout)?;
                Network::HftHlf(HftHlfModel {
                    backbone,
                    head,
                    backbone_frozen: d.backbone_frozen,
                })
            }
            ModelKind::Traditional => {
                let Some(hidden) = &d.hidden else {
                    return Err(corrupt("traditional dims need `hidden` widths"));
                };
                let stack = reader.mlp("hidden", d.homogeneous + d.heterogeneous, hidden, true, d.dropout)?;
                Network::Traditional(TraditionalModel {
                    stack,
                    homogeneous_dim: d.homogeneous,
                })
            }
        };
        if reader.layers.next().is_some() || reader.norms.next().is_some() {
            return Err(corrupt("unexpected trailing layers"));
        }
        let checkpoint = ModelCheckpoint {
            network,
            norm: file.norm_stats,
            vocab: file.vocab,
            layout: file.layout,
            meta: file.meta,
        };
        checkpoint.validate()?;
        Ok(checkpoint)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ModelCheckpoint, ModelError> {
    let text = std::fs::read_to_string(path)?;
    ModelCheckpoint::from_json(&text)
}
