use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ProtocolError;
use crate::encode::EncodedDataset;
use crate::model::Network;
use crate::neural::{mse_loss, AmsGrad, Mode};

pub const DEFAULT_EPOCHS: usize = 250;

/// Market-size class; selects the learning rate and batch size.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tier {
    One,
    Two,
    Three,
}

impl Tier {
    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(Tier::One),
            2 => Some(Tier::Two),
            3 => Some(Tier::Three),
            _ => None,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Tier::One => 1,
            Tier::Two => 2,
            Tier::Three => 3,
        }
    }

    /// `(learning rate, batch size)`
    pub fn preset(self) -> (f64, usize) {
        match self {
            Tier::One => (0.005, 256),
            Tier::Two => (0.01, 128),
            Tier::Three => (0.02, 64),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl TrainConfig {
    /// Tier preset with the default epoch count.
    pub fn for_tier(tier: Tier, seed: u64) -> Self {
        let (learning_rate, batch_size) = tier.preset();
        Self {
            learning_rate,
            batch_size,
            epochs: DEFAULT_EPOCHS,
            seed,
        }
    }

    pub fn with_epochs(mut self, epochs: usize) -> Self {
        self.epochs = epochs;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(ProtocolError::InvalidConfig(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size < 2 {
            return Err(ProtocolError::InvalidConfig(format!(
                "batch size must be at least 2, got {}",
                self.batch_size
            )));
        }
        if self.epochs == 0 {
            return Err(ProtocolError::InvalidConfig("epochs must be at least 1".into()));
        }
        Ok(())
    }
}

fn gather(m: &Array2<f64>, idx: &[usize]) -> Array2<f64> {
    m.select(Axis(0), idx)
}

/// Mini-batch AMSGrad on the MSE of the standardized targets.
///
/// Each epoch reshuffles the rows from `rng`; a trailing batch of one row is
/// skipped. Only tensors returned by
/// [`Network::trainable_params_mut`] are updated. Returns the mean training
/// loss of every epoch.
pub fn train<R: Rng + ?Sized>(
    network: &mut Network,
    data: &EncodedDataset,
    config: &TrainConfig,
    rng: &mut R,
) -> Result<Vec<f64>, ProtocolError> {
    config.validate()?;
    let n = data.len();
    if n < 2 {
        return Err(ProtocolError::EmptyDataset(n));
    }
    if data.homogeneous.ncols() != network.homogeneous_dim()
        || data.heterogeneous.ncols() != network.heterogeneous_dim()
    {
        return Err(crate::neural::NeuralError::ShapeMismatch {
            context: "dataset widths",
            expected: format!("{}+{}", network.homogeneous_dim(), network.heterogeneous_dim()),
            found: format!("{}+{}", data.homogeneous.ncols(), data.heterogeneous.ncols()),
        }
        .into());
    }

    let mut optimizer = AmsGrad::new(config.learning_rate);
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(rng);
        let mut loss_sum = 0.0;
        let mut rows = 0usize;
        for batch in order.chunks(config.batch_size) {
            if batch.len() < 2 {
                continue;
            }
            let homogeneous = gather(&data.homogeneous, batch);
            let heterogeneous = gather(&data.heterogeneous, batch);
            let target = data.target.select(Axis(0), batch);
            let (pred, cache) = network.forward(homogeneous.view(), heterogeneous.view(), Mode::Train, rng)?;
            let (loss, grad) = mse_loss(pred.column(0), target.view())?;
            if !loss.is_finite() {
                return Err(ProtocolError::NonFiniteLoss { epoch });
            }
            let upstream = grad.insert_axis(Axis(1));
            let grads = network.backward(&cache, upstream.view())?;
            optimizer.step(&mut network.trainable_params_mut(), &grads.slices())?;
            loss_sum += loss * batch.len() as f64;
            rows += batch.len();
        }
        history.push(loss_sum / rows as f64);
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tier_presets() {
        assert_eq!(Tier::One.preset(), (0.005, 256));
        assert_eq!(Tier::Two.preset(), (0.01, 128));
        assert_eq!(Tier::Three.preset(), (0.02, 64));
        let c = TrainConfig::for_tier(Tier::Three, 1);
        assert_eq!((c.learning_rate, c.batch_size, c.epochs), (0.02, 64, 250));
        assert_eq!(Tier::from_number(4), None);
    }

    #[test]
    fn invalid_configs() {
        let base = TrainConfig::for_tier(Tier::Two, 0);
        assert!(base.validate().is_ok());
        let mut c = base.clone();
        c.learning_rate = 0.0;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.batch_size = 1;
        assert!(c.validate().is_err());
        assert!(base.with_epochs(0).validate().is_err());
    }
}
