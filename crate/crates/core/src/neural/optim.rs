//! Adam with the AMSGrad running maximum on the second moment.

use super::{shape_err, NeuralError};

/// Moment buffers for one parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    /// Running maximum of `v`.
    pub v_max: Vec<f64>,
}

impl MomentState {
    fn zeros(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            v_max: vec![0.0; len],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AmsGrad {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    states: Vec<MomentState>,
}

impl AmsGrad {
    pub fn new(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            states: Vec::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn states(&self) -> &[MomentState] {
        &self.states
    }

    /// Applies one bias-corrected update to every parameter tensor.
    ///
    /// Buffers are allocated on the first call; later calls must pass
    /// tensors of the same count and lengths.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<(), NeuralError> {
        if params.len() != grads.len() {
            return Err(shape_err("optimizer tensor count", params.len(), grads.len()));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.len() != g.len() {
                return Err(shape_err("optimizer gradient length", p.len(), g.len()));
            }
            if let Some(s) = self.states.get(i) {
                if s.m.len() != p.len() {
                    return Err(shape_err("optimizer state length", s.m.len(), p.len()));
                }
            }
        }
        if self.states.is_empty() {
            self.states = params.iter().map(|p| MomentState::zeros(p.len())).collect();
        } else if self.states.len() != params.len() {
            return Err(shape_err("optimizer tensor count", self.states.len(), params.len()));
        }

        self.step += 1;
        let t = self.step as i32;
        let (b1, b2) = (self.beta1, self.beta2);
        let bias1 = 1.0 - b1.powi(t);
        let bias2 = 1.0 - b2.powi(t);
        let lr = self.learning_rate;
        let eps = self.eps;
        for ((param, grad), state) in params.iter_mut().zip(grads).zip(&mut self.states) {
            for j in 0..param.len() {
                let g = grad[j];
                let m = b1 * state.m[j] + (1.0 - b1) * g;
                let v = b2 * state.v[j] + (1.0 - b2) * g * g;
                let v_max = state.v_max[j].max(v);
                state.m[j] = m;
                state.v[j] = v;
                state.v_max[j] = v_max;
                param[j] -= lr * (m / bias1) / ((v_max / bias2).sqrt() + eps);
            }
        }
        Ok(())
    }
}
