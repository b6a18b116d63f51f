//! Compares the hand-written backward pass of the two-part network with
//! central finite differences on a tiny batch.
//!
//! cargo run --release --example gradient_check -- [seed]

use appraisal::model::{HftHlfModel, Network};
use appraisal::neural::Mode;
use appraisal::SeededRng;
use ndarray::Array2;
use rand::{Rng, SeedableRng};

const H: f64 = 1e-5;

fn probe_loss(net: &Network, homog: &Array2<f64>, heterog: &Array2<f64>, weights: &Array2<f64>, mask_seed: u64) -> f64 {
    let mut rng = SeededRng::seed_from_u64(mask_seed);
    let (y, _) = net.clone().forward(homog.view(), heterog.view(), Mode::Train, &mut rng).unwrap();
    (&y * weights).sum()
}

fn main() -> anyhow::Result<()> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0);
    let mut rng = SeededRng::seed_from_u64(seed);
    let rows = 5;
    let model = HftHlfModel::with_widths(6, 3, &[8, 6, 4], &[6, 4], 0.5, &mut rng)?;
    let mut net = Network::HftHlf(model);
    let homog = Array2::from_shape_simple_fn((rows, 6), || rng.random_range(-1.0..1.0));
    let heterog = Array2::from_shape_fn((rows, 3), |(r, c)| f64::from(r % 3 == c));
    let weights = Array2::from_shape_simple_fn((rows, 1), || rng.random_range(-1.0..1.0));
    let mask_seed = rng.random();

    let (_, cache) = net
        .clone()
        .forward(homog.view(), heterog.view(), Mode::Train, &mut SeededRng::seed_from_u64(mask_seed))?;
    let grads = net.backward(&cache, weights.view())?;
    let analytic: Vec<Vec<f64>> = grads.slices().iter().map(|s| s.to_vec()).collect();

    let mut worst = 0.0f64;
    let mut checked = 0;
    for (t, g) in analytic.iter().enumerate() {
        for j in 0..g.len() {
            let orig = net.trainable_params_mut()[t][j];
            net.trainable_params_mut()[t][j] = orig + H;
            let up = probe_loss(&net, &homog, &heterog, &weights, mask_seed);
            net.trainable_params_mut()[t][j] = orig - H;
            let down = probe_loss(&net, &homog, &heterog, &weights, mask_seed);
            net.trainable_params_mut()[t][j] = orig;
            let numeric = (up - down) / (2.0 * H);
            let err = (g[j] - numeric).abs() / g[j].abs().max(numeric.abs()).max(1e-5);
            worst = worst.max(err);
            checked += 1;
        }
    }
    println!("checked {checked} parameters across {} tensors", analytic.len());
    println!("worst relative error {worst:.2e}");
    Ok(())
}
