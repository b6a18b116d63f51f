use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::{shape_err, Mode, NeuralError};

pub const BN_MOMENTUM: f64 = 0.1;
pub const BN_EPS: f64 = 1e-5;

/// Per-feature batch normalization with a learned affine transform and
/// exponential running statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchNorm {
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
    pub momentum: f64,
    pub eps: f64,
}

/// Values saved by the forward pass for the backward pass.
#[derive(Clone, Debug)]
pub struct BatchNormCache {
    x_hat: Array2<f64>,
    inv_std: Array1<f64>,
    mode: Mode,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchNormGrads {
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
}

impl BatchNorm {
    pub fn new(features: usize) -> Self {
        Self {
            gamma: Array1::ones(features),
            beta: Array1::zeros(features),
            running_mean: Array1::zeros(features),
            running_var: Array1::ones(features),
            momentum: BN_MOMENTUM,
            eps: BN_EPS,
        }
    }

    pub fn features(&self) -> usize {
        self.gamma.len()
    }

    fn check_input(&self, x: &ArrayView2<'_, f64>) -> Result<(), NeuralError> {
        if x.ncols() != self.features() {
            return Err(shape_err("batch norm input width", self.features(), x.ncols()));
        }
        Ok(())
    }

    /// Normalizes with batch statistics (`Train`, which also updates the
    /// running statistics) or with the running statistics (`Infer`).
    pub fn forward(
        &mut self,
        x: ArrayView2<'_, f64>,
        mode: Mode,
    ) -> Result<(Array2<f64>, BatchNormCache), NeuralError> {
        self.check_input(&x)?;
        let (mean, var) = match mode {
            Mode::Train => {
                let n = x.nrows();
                if n < 2 {
                    return Err(NeuralError::BatchTooSmall(n));
                }
                let mean = x.mean_axis(Axis(0)).expect("non-empty batch");
                let var = x.var_axis(Axis(0), 0.0);
                // running variance tracks the unbiased estimate
                let unbiased = &var * (n as f64 / (n as f64 - 1.0));
                let m = self.momentum;
                self.running_mean = &self.running_mean * (1.0 - m) + &mean * m;
                self.running_var = &self.running_var * (1.0 - m) + unbiased * m;
                (mean, var)
            }
            Mode::Infer => (self.running_mean.clone(), self.running_var.clone()),
        };
        let inv_std = var.mapv(|v| 1.0 / (v + self.eps).sqrt());
        let x_hat = (&x - &mean) * &inv_std;
        let y = &x_hat * &self.gamma + &self.beta;
        Ok((
            y,
            BatchNormCache {
                x_hat,
                inv_std,
                mode,
            },
        ))
    }

    /// Inference-mode forward without touching any state.
    pub fn infer(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>, NeuralError> {
        self.check_input(&x)?;
        let inv_std = self.running_var.mapv(|v| 1.0 / (v + self.eps).sqrt());
        let x_hat = (&x - &self.running_mean) * &inv_std;
        Ok(&x_hat * &self.gamma + &self.beta)
    }

    pub fn backward(
        &self,
        cache: &BatchNormCache,
        upstream: ArrayView2<'_, f64>,
    ) -> Result<(Array2<f64>, BatchNormGrads), NeuralError> {
        if upstream.dim() != cache.x_hat.dim() {
            return Err(shape_err(
                "batch norm upstream gradient",
                format!("{:?}", cache.x_hat.dim()),
                format!("{:?}", upstream.dim()),
            ));
        }
        let grad_beta = upstream.sum_axis(Axis(0));
        let grad_gamma = (&upstream * &cache.x_hat).sum_axis(Axis(0));
        let grad_x = match cache.mode {
            Mode::Infer => &upstream * &(&self.gamma * &cache.inv_std),
            Mode::Train => {
                // dx = γ/(σ N) · (N dy − Σdy − x̂ Σ(dy x̂))
                let n = upstream.nrows() as f64;
                let scale = &self.gamma * &cache.inv_std / n;
                let centered = &upstream * n - &grad_beta - &cache.x_hat * &grad_gamma;
                centered * &scale
            }
        };
        Ok((
            grad_x,
            BatchNormGrads {
                gamma: grad_gamma,
                beta: grad_beta,
            },
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_column_normalizes_to_zero() {
        let mut bn = BatchNorm::new(2);
        let x = array![[3.0, 1.0], [3.0, 2.0], [3.0, 6.0]];
        let (y, _) = bn.forward(x.view(), Mode::Train).unwrap();
        assert!(y.column(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn train_output_is_standardized() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut bn = BatchNorm::new(5);
        let x = Array2::from_shape_simple_fn((32, 5), || rng.random_range(-4.0..9.0));
        let (y, _) = bn.forward(x.view(), Mode::Train).unwrap();
        let var_in = x.var_axis(Axis(0), 0.0);
        for (j, col) in y.columns().into_iter().enumerate() {
            let mean = col.mean().unwrap();
            let var = col.var(0.0);
            assert!(mean.abs() < 1e-6);
            let expected = var_in[j] / (var_in[j] + BN_EPS);
            assert!((var - expected).abs() < 1e-6);
        }
    }

    #[test]
    fn running_stats_follow_momentum() {
        let mut bn = BatchNorm::new(1);
        let x = array![[1.0], [3.0]];
        bn.forward(x.view(), Mode::Train).unwrap();
        // batch mean 2, unbiased variance 2
        assert!((bn.running_mean[0] - 0.2).abs() < 1e-15);
        assert!((bn.running_var[0] - (0.9 + 0.2)).abs() < 1e-15);
    }

    #[test]
    fn single_row_train_batch_is_rejected() {
        let mut bn = BatchNorm::new(3);
        let err = bn.forward(Array2::zeros((1, 3)).view(), Mode::Train).unwrap_err();
        assert_eq!(err, NeuralError::BatchTooSmall(1));
        assert!(bn.forward(Array2::zeros((1, 3)).view(), Mode::Infer).is_ok());
    }

    #[test]
    fn infer_matches_forward_in_infer_mode() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut bn = BatchNorm::new(3);
        bn.gamma = array![0.5, 2.0, -1.0];
        bn.beta = array![0.1, 0.0, 3.0];
        let warm = Array2::from_shape_simple_fn((10, 3), || rng.random_range(-1.0..1.0));
        bn.forward(warm.view(), Mode::Train).unwrap();
        let x = Array2::from_shape_simple_fn((4, 3), || rng.random_range(-1.0..1.0));
        let frozen = bn.clone();
        let (y, _) = bn.forward(x.view(), Mode::Infer).unwrap();
        assert_eq!(bn, frozen);
        assert_eq!(y, bn.infer(x.view()).unwrap());
    }
}
