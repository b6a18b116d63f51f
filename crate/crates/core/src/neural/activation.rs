use ndarray::{Array2, ArrayView2, Zip};
use rand::Rng;

use super::{shape_err, Mode, NeuralError};

/// Negative-side slope used by every hidden block.
pub const LEAKY_SLOPE: f64 = 0.1;

pub fn leaky_relu(x: ArrayView2<'_, f64>, slope: f64) -> Array2<f64> {
    x.mapv(|v| if v >= 0.0 { v } else { slope * v })
}

/// Backward pass of [`leaky_relu`]. `pre` is the activation input; the
/// derivative at exactly zero is taken as 1.
pub fn leaky_relu_backward(
    pre: ArrayView2<'_, f64>,
    upstream: ArrayView2<'_, f64>,
    slope: f64,
) -> Result<Array2<f64>, NeuralError> {
    if pre.dim() != upstream.dim() {
        return Err(shape_err(
            "leaky relu upstream gradient",
            format!("{:?}", pre.dim()),
            format!("{:?}", upstream.dim()),
        ));
    }
    Ok(Zip::from(&pre)
        .and(&upstream)
        .map_collect(|&p, &g| if p >= 0.0 { g } else { slope * g }))
}

/// Inverted dropout: survivors are scaled by `1 / (1 - rate)` at training
/// time so inference is an identity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dropout {
    rate: f64,
}

impl Dropout {
    /// # Panics
    /// If `rate` is outside `[0, 1)`.
    pub fn new(rate: f64) -> Self {
        assert!(
            (0.0..1.0).contains(&rate),
            "dropout rate must be in [0, 1), got {rate}"
        );
        Self { rate }
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Returns the output and, in training mode with a non-zero rate, the
    /// scaling mask (entries `0` or `1 / (1 - rate)`) needed by
    /// [`Dropout::backward`].
    pub fn forward<R: Rng + ?Sized>(
        &self,
        x: ArrayView2<'_, f64>,
        mode: Mode,
        rng: &mut R,
    ) -> (Array2<f64>, Option<Array2<f64>>) {
        if mode == Mode::Infer || self.rate == 0.0 {
            return (x.to_owned(), None);
        }
        let keep_scale = 1.0 / (1.0 - self.rate);
        let mask = Array2::from_shape_simple_fn(x.dim(), || {
            if rng.random::<f64>() < self.rate {
                0.0
            } else {
                keep_scale
            }
        });
        (&x * &mask, Some(mask))
    }

    pub fn backward(mask: Option<&Array2<f64>>, upstream: ArrayView2<'_, f64>) -> Array2<f64> {
        match mask {
            Some(m) => &upstream * m,
            None => upstream.to_owned(),
        }
    }
}
