use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::Dense;

/// He-normal initialization: weights drawn from `N(0, sqrt(2 / fan_in))`,
/// biases zero.
///
/// # Panics
/// If either dimension is zero.
pub fn he_init<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Dense {
    assert!(fan_in >= 1 && fan_out >= 1, "layer dimensions must be at least 1");
    let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("finite std");
    let weight = Array2::from_shape_simple_fn((fan_out, fan_in), || normal.sample(rng));
    Dense {
        weight,
        bias: Array1::zeros(fan_out),
    }
}
