use serde::{Deserialize, Serialize};

use super::ProtocolError;
use crate::encode::{decode_target, encode_features, encode_target};
use crate::ingest::PropertyRecord;
use crate::model::ModelCheckpoint;

/// Accuracy on a test set. `rmse` and `r2` are measured on the
/// standardized log price, `mape` on raw prices (as a fraction).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub rmse: f64,
    pub mape: f64,
    pub r2: f64,
    pub n: usize,
}

impl MetricsReport {
    /// Arithmetic mean of each metric; `n` is the total sample count.
    pub fn mean(reports: &[MetricsReport]) -> Option<MetricsReport> {
        if reports.is_empty() {
            return None;
        }
        let k = reports.len() as f64;
        Some(MetricsReport {
            rmse: reports.iter().map(|r| r.rmse).sum::<f64>() / k,
            mape: reports.iter().map(|r| r.mape).sum::<f64>() / k,
            r2: reports.iter().map(|r| r.r2).sum::<f64>() / k,
            n: reports.iter().map(|r| r.n).sum(),
        })
    }
}

/// Metrics from standardized predictions/targets and raw predicted/true
/// prices. All slices must have the same length.
pub fn metrics_from(
    pred_target: &[f64],
    true_target: &[f64],
    pred_price: &[f64],
    true_price: &[f64],
) -> Result<MetricsReport, ProtocolError> {
    let n = true_target.len();
    assert!(
        pred_target.len() == n && pred_price.len() == n && true_price.len() == n,
        "metric inputs must have equal lengths"
    );
    if n < 2 {
        return Err(ProtocolError::TooFewSamples(n));
    }
    let nf = n as f64;
    let sse: f64 = pred_target
        .iter()
        .zip(true_target)
        .map(|(p, t)| (p - t).powi(2))
        .sum();
    let mean_t = true_target.iter().sum::<f64>() / nf;
    let sst: f64 = true_target.iter().map(|t| (t - mean_t).powi(2)).sum();
    if sst == 0.0 {
        return Err(ProtocolError::ZeroVarianceTargets);
    }
    let mape = pred_price
        .iter()
        .zip(true_price)
        .map(|(p, t)| (p - t).abs() / t)
        .sum::<f64>()
        / nf;
    Ok(MetricsReport {
        rmse: (sse / nf).sqrt(),
        mape,
        r2: 1.0 - sse / sst,
        n,
    })
}

/// Scores a checkpoint on cleaned records, encoding them with the
/// checkpoint's own statistics and vocabulary.
pub fn evaluate(checkpoint: &ModelCheckpoint, records: &[PropertyRecord]) -> Result<MetricsReport, ProtocolError> {
    if records.len() < 2 {
        return Err(ProtocolError::TooFewSamples(records.len()));
    }
    let norm = &checkpoint.norm;
    let (homogeneous, heterogeneous) = encode_features(records, norm, &checkpoint.layout, &checkpoint.vocab);
    let pred_t = checkpoint.network.predict(homogeneous.view(), heterogeneous.view())?;
    let pred_t = pred_t.to_vec();
    let true_t = records
        .iter()
        .map(|r| encode_target(r.price, norm))
        .collect::<Result<Vec<_>, _>>()?;
    let pred_p: Vec<f64> = pred_t.iter().map(|&t| decode_target(t, norm)).collect();
    let true_p: Vec<f64> = records.iter().map(|r| r.price).collect();
    metrics_from(&pred_t, &true_t, &pred_p, &true_p)
}
