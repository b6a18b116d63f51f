use ndarray::{Array1, ArrayView1};

use super::NeuralError;

/// Mean squared error and its gradient with respect to the predictions.
pub fn mse_loss(
    pred: ArrayView1<'_, f64>,
    target: ArrayView1<'_, f64>,
) -> Result<(f64, Array1<f64>), NeuralError> {
    if pred.len() != target.len() {
        return Err(NeuralError::LengthMismatch {
            pred: pred.len(),
            target: target.len(),
        });
    }
    if pred.is_empty() {
        return Err(NeuralError::EmptyInput);
    }
    let n = pred.len() as f64;
    let diff = &pred - &target;
    let loss = diff.iter().map(|d| d * d).sum::<f64>() / n;
    Ok((loss, diff * (2.0 / n)))
}
