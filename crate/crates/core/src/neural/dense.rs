use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::{shape_err, NeuralError};

/// Fully connected layer computing `y = x Wᵀ + b` for a row-major batch `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    /// `out × in`
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseGrads {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn new(weight: Array2<f64>, bias: Array1<f64>) -> Result<Self, NeuralError> {
        if weight.nrows() != bias.len() {
            return Err(shape_err(
                "dense bias",
                weight.nrows(),
                bias.len(),
            ));
        }
        Ok(Self {
            weight: weight.as_standard_layout().into_owned(),
            bias,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.nrows()
    }

    pub fn param_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    fn check_input(&self, x: &ArrayView2<'_, f64>) -> Result<(), NeuralError> {
        if x.ncols() != self.in_dim() {
            return Err(shape_err("dense input width", self.in_dim(), x.ncols()));
        }
        Ok(())
    }

    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>, NeuralError> {
        self.check_input(&x)?;
        let mut y = x.dot(&self.weight.t());
        y += &self.bias;
        Ok(y)
    }

    /// Returns the gradient with respect to the input and the parameter
    /// gradients, given the gradient of the loss with respect to the output.
    pub fn backward(
        &self,
        x: ArrayView2<'_, f64>,
        upstream: ArrayView2<'_, f64>,
    ) -> Result<(Array2<f64>, DenseGrads), NeuralError> {
        self.check_input(&x)?;
        if upstream.dim() != (x.nrows(), self.out_dim()) {
            return Err(shape_err(
                "dense upstream gradient",
                format!("{}x{}", x.nrows(), self.out_dim()),
                format!("{}x{}", upstream.nrows(), upstream.ncols()),
            ));
        }
        let grad_x = upstream.dot(&self.weight);
        let grad_w = upstream.t().dot(&x).as_standard_layout().into_owned();
        let grad_b = upstream.sum_axis(Axis(0));
        Ok((
            grad_x,
            DenseGrads {
                weight: grad_w,
                bias: grad_b,
            },
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn identity_weight_passes_input_through() {
        let layer = Dense::new(Array2::eye(3), Array1::zeros(3)).unwrap();
        let x = array![[1.0, -2.0, 3.5], [0.0, 4.0, -1.0]];
        assert_eq!(layer.forward(x.view()).unwrap(), x);
    }

    #[test]
    fn zero_input_yields_bias() {
        let layer = Dense::new(array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]], array![0.5, -1.0, 2.0])
            .unwrap();
        let y = layer.forward(Array2::zeros((4, 2)).view()).unwrap();
        for row in y.rows() {
            assert_eq!(row, array![0.5, -1.0, 2.0]);
        }
    }

    #[test]
    fn wrong_input_width_is_rejected() {
        let layer = Dense::new(Array2::eye(3), Array1::zeros(3)).unwrap();
        let err = layer.forward(Array2::zeros((2, 4)).view()).unwrap_err();
        assert!(matches!(err, NeuralError::ShapeMismatch { .. }));
        assert!(Dense::new(Array2::eye(3), Array1::zeros(2)).is_err());
    }
}
