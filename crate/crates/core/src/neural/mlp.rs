//! Stack of hidden blocks (dense → batch norm → leaky ReLU → dropout) with an
//! optional linear output layer.

use ndarray::{Array2, ArrayView2};
use rand::Rng;

use super::{
    he_init, leaky_relu, leaky_relu_backward, shape_err, BatchNorm, BatchNormCache,
    BatchNormGrads, Dense, DenseGrads, Dropout, Mode, NeuralError, LEAKY_SLOPE,
};

#[derive(Clone, Debug, PartialEq)]
pub struct HiddenBlock {
    pub dense: Dense,
    pub norm: BatchNorm,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    pub blocks: Vec<HiddenBlock>,
    pub output: Option<Dense>,
    pub dropout: Dropout,
}

struct BlockCache {
    input: Array2<f64>,
    norm: BatchNormCache,
    pre_activation: Array2<f64>,
    mask: Option<Array2<f64>>,
}

pub struct MlpCache {
    blocks: Vec<BlockCache>,
    /// Input to the output layer, when there is one.
    last_hidden: Option<Array2<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockGrads {
    pub dense: DenseGrads,
    pub norm: BatchNormGrads,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpGrads {
    pub blocks: Vec<BlockGrads>,
    pub output: Option<DenseGrads>,
}

impl MlpGrads {
    /// Flat gradient views in the same order as [`Mlp::params_mut`].
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(4 * self.blocks.len() + 2);
        for b in &self.blocks {
            out.push(b.dense.weight.as_slice().expect("standard layout"));
            out.push(b.dense.bias.as_slice().expect("standard layout"));
            out.push(b.norm.gamma.as_slice().expect("standard layout"));
            out.push(b.norm.beta.as_slice().expect("standard layout"));
        }
        if let Some(o) = &self.output {
            out.push(o.weight.as_slice().expect("standard layout"));
            out.push(o.bias.as_slice().expect("standard layout"));
        }
        out
    }
}

impl Mlp {
    /// He-initialized stack over `in_dim` inputs with one hidden block per
    /// entry of `widths`, plus a width-1 linear output when `with_output`.
    pub fn new<R: Rng + ?Sized>(
        in_dim: usize,
        widths: &[usize],
        with_output: bool,
        dropout_rate: f64,
        rng: &mut R,
    ) -> Self {
        let mut blocks = Vec::with_capacity(widths.len());
        let mut fan_in = in_dim;
        for &w in widths {
            blocks.push(HiddenBlock {
                dense: he_init(fan_in, w, rng),
                norm: BatchNorm::new(w),
            });
            fan_in = w;
        }
        let output = with_output.then(|| he_init(fan_in, 1, rng));
        Self {
            blocks,
            output,
            dropout: Dropout::new(dropout_rate),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.blocks
            .first()
            .map(|b| b.dense.in_dim())
            .or_else(|| self.output.as_ref().map(Dense::in_dim))
            .unwrap_or(0)
    }

    pub fn out_dim(&self) -> usize {
        match (&self.output, self.blocks.last()) {
            (Some(o), _) => o.out_dim(),
            (None, Some(b)) => b.dense.out_dim(),
            (None, None) => 0,
        }
    }

    pub fn param_count(&self) -> usize {
        self.blocks
            .iter()
            .map(|b| b.dense.param_count() + 2 * b.norm.features())
            .sum::<usize>()
            + self.output.as_ref().map_or(0, Dense::param_count)
    }

    /// Mutable flat views of every learned tensor: per block weight, bias,
    /// gamma, beta; then output weight and bias.
    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(4 * self.blocks.len() + 2);
        for b in &mut self.blocks {
            out.push(b.dense.weight.as_slice_mut().expect("standard layout"));
            out.push(b.dense.bias.as_slice_mut().expect("standard layout"));
            out.push(b.norm.gamma.as_slice_mut().expect("standard layout"));
            out.push(b.norm.beta.as_slice_mut().expect("standard layout"));
        }
        if let Some(o) = &mut self.output {
            out.push(o.weight.as_slice_mut().expect("standard layout"));
            out.push(o.bias.as_slice_mut().expect("standard layout"));
        }
        out
    }

    pub fn forward<R: Rng + ?Sized>(
        &mut self,
        x: ArrayView2<'_, f64>,
        mode: Mode,
        rng: &mut R,
    ) -> Result<(Array2<f64>, MlpCache), NeuralError> {
        if x.ncols() != self.in_dim() {
            return Err(shape_err("network input width", self.in_dim(), x.ncols()));
        }
        let dropout = self.dropout;
        let mut caches = Vec::with_capacity(self.blocks.len());
        let mut h = x.to_owned();
        for block in &mut self.blocks {
            let z = block.dense.forward(h.view())?;
            let (normed, norm_cache) = block.norm.forward(z.view(), mode)?;
            let activated = leaky_relu(normed.view(), LEAKY_SLOPE);
            let (out, mask) = dropout.forward(activated.view(), mode, rng);
            caches.push(BlockCache {
                input: h,
                norm: norm_cache,
                pre_activation: normed,
                mask,
            });
            h = out;
        }
        let (y, last_hidden) = match &self.output {
            Some(o) => (o.forward(h.view())?, Some(h)),
            None => (h, None),
        };
        Ok((
            y,
            MlpCache {
                blocks: caches,
                last_hidden,
            },
        ))
    }

    /// Inference forward pass; leaves every running statistic untouched.
    pub fn infer(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>, NeuralError> {
        if x.ncols() != self.in_dim() {
            return Err(shape_err("network input width", self.in_dim(), x.ncols()));
        }
        let mut h = x.to_owned();
        for block in &self.blocks {
            let z = block.dense.forward(h.view())?;
            let normed = block.norm.infer(z.view())?;
            h = leaky_relu(normed.view(), LEAKY_SLOPE);
        }
        match &self.output {
            Some(o) => o.forward(h.view()),
            None => Ok(h),
        }
    }

    /// Gradient of the loss with respect to the network input, and with
    /// respect to every parameter.
    pub fn backward(
        &self,
        cache: &MlpCache,
        upstream: ArrayView2<'_, f64>,
    ) -> Result<(Array2<f64>, MlpGrads), NeuralError> {
        let (mut grad, output) = match (&self.output, &cache.last_hidden) {
            (Some(o), Some(h)) => {
                let (gx, gp) = o.backward(h.view(), upstream)?;
                (gx, Some(gp))
            }
            _ => (upstream.to_owned(), None),
        };
        let mut block_grads = Vec::with_capacity(self.blocks.len());
        for (block, bc) in self.blocks.iter().zip(&cache.blocks).rev() {
            let g_act = Dropout::backward(bc.mask.as_ref(), grad.view());
            let g_norm = leaky_relu_backward(bc.pre_activation.view(), g_act.view(), LEAKY_SLOPE)?;
            let (g_dense_out, norm_grads) = block.norm.backward(&bc.norm, g_norm.view())?;
            let (g_in, dense_grads) = block.dense.backward(bc.input.view(), g_dense_out.view())?;
            block_grads.push(BlockGrads {
                dense: dense_grads,
                norm: norm_grads,
            });
            grad = g_in;
        }
        block_grads.reverse();
        Ok((
            grad,
            MlpGrads {
                blocks: block_grads,
                output,
            },
        ))
    }
}
