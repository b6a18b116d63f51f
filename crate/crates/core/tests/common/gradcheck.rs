//! Finite-difference checks of every differentiable piece. Each function
//! draws a random shape from `seed` and returns the worst relative error.

use appraisal::model::{HftHlfModel, Network, TraditionalModel};
use appraisal::neural::{
    he_init, leaky_relu, leaky_relu_backward, mse_loss, BatchNorm, Dense, Dropout, Mlp, Mode, LEAKY_SLOPE,
};
use appraisal::SeededRng;
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};

use super::{check_input, check_params, probe, random_matrix, rel_err, FD_STEP};

fn dense_params(d: &mut Dense) -> Vec<&mut [f64]> {
    vec![d.weight.as_slice_mut().unwrap(), d.bias.as_slice_mut().unwrap()]
}

fn bn_params(b: &mut BatchNorm) -> Vec<&mut [f64]> {
    vec![b.gamma.as_slice_mut().unwrap(), b.beta.as_slice_mut().unwrap()]
}

fn network_params(n: &mut Network) -> Vec<&mut [f64]> {
    n.trainable_params_mut()
}

pub fn dense(seed: u64) -> f64 {
    let mut rng = SeededRng::seed_from_u64(seed);
    let (n, i, o) = (rng.random_range(1..6), rng.random_range(1..7), rng.random_range(1..7));
    let mut layer = he_init(i, o, &mut rng);
    layer.bias.mapv_inplace(|_| rng.random_range(-1.0..1.0));
    let x = random_matrix(n, i, &mut rng);
    let w = random_matrix(n, o, &mut rng);
    let (gx, g) = layer.backward(x.view(), w.view()).unwrap();
    let analytic = vec![g.weight.iter().copied().collect(), g.bias.to_vec()];
    let p = check_params(
        &mut layer,
        dense_params,
        &mut |d: &mut Dense| probe(&d.forward(x.view()).unwrap(), &w),
        &analytic,
        1,
    );
    let layer2 = layer.clone();
    let xi = check_input(&x, &gx, &mut |x| probe(&layer2.forward(x.view()).unwrap(), &w));
    p.max(xi)
}

pub fn batchnorm(seed: u64) -> f64 {
    let mut rng = SeededRng::seed_from_u64(seed);
    let (n, f) = (rng.random_range(2..7), rng.random_range(1..6));
    let mut bn = BatchNorm::new(f);
    bn.gamma.mapv_inplace(|_| rng.random_range(0.5..1.5));
    bn.beta.mapv_inplace(|_| rng.random_range(-0.5..0.5));
    let x = random_matrix(n, f, &mut rng) * 3.0;
    let w = random_matrix(n, f, &mut rng);
    let mut worst: f64 = 0.0;
    for mode in [Mode::Train, Mode::Infer] {
        if mode == Mode::Infer {
            bn.running_mean.mapv_inplace(|_| rng.random_range(-1.0..1.0));
            bn.running_var.mapv_inplace(|_| rng.random_range(0.5..2.0));
        }
        let (_, cache) = bn.clone().forward(x.view(), mode).unwrap();
        let (gx, g) = bn.backward(&cache, w.view()).unwrap();
        let analytic = vec![g.gamma.to_vec(), g.beta.to_vec()];
        let p = check_params(
            &mut bn,
            bn_params,
            &mut |b: &mut BatchNorm| probe(&b.clone().forward(x.view(), mode).unwrap().0, &w),
            &analytic,
            1,
        );
        let bn2 = bn.clone();
        let xi = check_input(&x, &gx, &mut |x| probe(&bn2.clone().forward(x.view(), mode).unwrap().0, &w));
        worst = worst.max(p).max(xi);
    }
    worst
}

pub fn leaky(seed: u64) -> f64 {
    let mut rng = SeededRng::seed_from_u64(seed);
    let (n, f) = (rng.random_range(1..6), rng.random_range(1..6));
    // Keep away from the kink at zero.
    let x = Array2::from_shape_simple_fn((n, f), || {
        let v: f64 = rng.random_range(0.01..2.0);
        if rng.random_bool(0.5) { v } else { -v }
    });
    let w = random_matrix(n, f, &mut rng);
    let gx = leaky_relu_backward(x.view(), w.view(), LEAKY_SLOPE).unwrap();
    check_input(&x, &gx, &mut |x| probe(&leaky_relu(x.view(), LEAKY_SLOPE), &w))
}

pub fn dropout(seed: u64) -> f64 {
    let mut rng = SeededRng::seed_from_u64(seed);
    let (n, f) = (rng.random_range(1..6), rng.random_range(1..6));
    let layer = Dropout::new(rng.random_range(0.0..0.9));
    let x = random_matrix(n, f, &mut rng);
    let w = random_matrix(n, f, &mut rng);
    let mask_seed = rng.random::<u64>();
    let run = |x: &Array2<f64>| layer.forward(x.view(), Mode::Train, &mut SeededRng::seed_from_u64(mask_seed));
    let (_, mask) = run(&x);
    let gx = Dropout::backward(mask.as_ref(), w.view());
    check_input(&x, &gx, &mut |x| probe(&run(x).0, &w))
}

pub fn mse(seed: u64) -> f64 {
    let mut rng = SeededRng::seed_from_u64(seed);
    let n = rng.random_range(1..10);
    let pred = Array1::from_shape_simple_fn(n, || rng.random_range(-2.0..2.0));
    let target = Array1::from_shape_simple_fn(n, || rng.random_range(-2.0..2.0));
    let (_, grad) = mse_loss(pred.view(), target.view()).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let mut p = pred.clone();
        p[i] += FD_STEP;
        let up = mse_loss(p.view(), target.view()).unwrap().0;
        p[i] -= 2.0 * FD_STEP;
        let down = mse_loss(p.view(), target.view()).unwrap().0;
        worst = worst.max(rel_err(grad[i], (up - down) / (2.0 * FD_STEP)));
    }
    worst
}

/// Nonzero shifts keep batch-norm outputs of constant columns off the
/// activation kink at zero.
fn shift_betas<R: Rng>(net: &mut Mlp, rng: &mut R) {
    for b in &mut net.blocks {
        b.norm.beta.mapv_inplace(|_| rng.random_range(0.05..0.5) * if rng.random_bool(0.5) { 1.0 } else { -1.0 });
    }
}

/// Widths of at least 2 and batches of at least 4 keep batch-norm columns
/// from collapsing to near-constant values, where central differences lose
/// accuracy regardless of the gradient's correctness.
fn random_widths<R: Rng>(rng: &mut R, max_len: usize) -> Vec<usize> {
    (0..rng.random_range(1..=max_len)).map(|_| rng.random_range(2..7)).collect()
}

/// A whole hidden stack with output unit; dropout active, masks fixed by
/// reseeding the RNG for every evaluation.
pub fn mlp(seed: u64) -> f64 {
    let mut rng = SeededRng::seed_from_u64(seed);
    let n = rng.random_range(4..8);
    let i = rng.random_range(1..6);
    let widths = random_widths(&mut rng, 3);
    let rate = if rng.random_bool(0.5) { 0.5 } else { 0.0 };
    let mut net = Mlp::new(i, &widths, true, rate, &mut rng);
    shift_betas(&mut net, &mut rng);
    let x = random_matrix(n, i, &mut rng);
    let w = random_matrix(n, 1, &mut rng);
    let mask_seed = rng.random::<u64>();
    let (_, cache) = net.clone().forward(x.view(), Mode::Train, &mut SeededRng::seed_from_u64(mask_seed)).unwrap();
    let (gx, g) = net.backward(&cache, w.view()).unwrap();
    let analytic: Vec<Vec<f64>> = g.slices().into_iter().map(<[f64]>::to_vec).collect();
    let mut eval = |m: &mut Mlp| {
        let y = m.clone().forward(x.view(), Mode::Train, &mut SeededRng::seed_from_u64(mask_seed)).unwrap().0;
        probe(&y, &w)
    };
    let p = check_params(&mut net, Mlp::params_mut, &mut eval, &analytic, 1);
    let frozen = net.clone();
    let xi = check_input(&x, &gx, &mut |x| {
        let y = frozen.clone().forward(x.view(), Mode::Train, &mut SeededRng::seed_from_u64(mask_seed)).unwrap().0;
        probe(&y, &w)
    });
    p.max(xi)
}

fn network_check(mut net: Network, homog: Array2<f64>, heterog: Array2<f64>, mask_seed: u64, w: Array2<f64>, stride: usize) -> f64 {
    let forward = |n: &mut Network| {
        n.clone()
            .forward(homog.view(), heterog.view(), Mode::Train, &mut SeededRng::seed_from_u64(mask_seed))
            .unwrap()
    };
    let (_, cache) = forward(&mut net);
    let g = net.backward(&cache, w.view()).unwrap();
    let analytic: Vec<Vec<f64>> = g.slices().into_iter().map(<[f64]>::to_vec).collect();
    check_params(&mut net, network_params, &mut |n: &mut Network| probe(&forward(n).0, &w), &analytic, stride)
}

/// The two-part network end to end, backbone trainable or frozen.
pub fn hft_hlf(seed: u64) -> f64 {
    let mut rng = SeededRng::seed_from_u64(seed);
    let n = rng.random_range(4..8);
    let (h, l) = (rng.random_range(1..6), rng.random_range(1..6));
    let backbone = random_widths(&mut rng, 3);
    let head = random_widths(&mut rng, 2);
    let rate = if rng.random_bool(0.5) { 0.5 } else { 0.0 };
    let mut model = HftHlfModel::with_widths(h, l, &backbone, &head, rate, &mut rng).unwrap();
    shift_betas(&mut model.backbone, &mut rng);
    shift_betas(&mut model.head, &mut rng);
    model.backbone_frozen = rng.random_bool(0.25);
    let homog = random_matrix(n, h, &mut rng);
    let heterog = random_matrix(n, l, &mut rng).mapv(|v| f64::from(v > 0.0));
    let w = random_matrix(n, 1, &mut rng);
    let mask_seed = rng.random::<u64>();
    network_check(Network::HftHlf(model), homog, heterog, mask_seed, w, 1)
}

pub fn traditional(seed: u64) -> f64 {
    let mut rng = SeededRng::seed_from_u64(seed);
    let n = rng.random_range(4..8);
    let (h, l) = (rng.random_range(1..6), rng.random_range(1..6));
    let widths = random_widths(&mut rng, 3);
    let rate = if rng.random_bool(0.5) { 0.5 } else { 0.0 };
    let mut model = TraditionalModel::with_widths(h, l, &widths, rate, &mut rng).unwrap();
    shift_betas(&mut model.stack, &mut rng);
    let homog = random_matrix(n, h, &mut rng);
    let heterog = random_matrix(n, l, &mut rng).mapv(|v| f64::from(v > 0.0));
    let w = random_matrix(n, 1, &mut rng);
    let mask_seed = rng.random::<u64>();
    network_check(Network::Traditional(model), homog, heterog, mask_seed, w, 1)
}

/// Full-size architecture on a 4-row toy with 6 homogeneous and 3 location
/// inputs, dropout off. Checks every `stride`-th coordinate.
pub fn full_size_toy(seed: u64, stride: usize) -> f64 {
    let mut rng = SeededRng::seed_from_u64(seed);
    let mut model = HftHlfModel::build(6, 3, &mut rng).unwrap();
    model.backbone.dropout = Dropout::new(0.0);
    model.head.dropout = Dropout::new(0.0);
    shift_betas(&mut model.backbone, &mut rng);
    shift_betas(&mut model.head, &mut rng);
    let homog = random_matrix(4, 6, &mut rng);
    let heterog = Array2::from_shape_fn((4, 3), |(r, c)| f64::from(r % 3 == c));
    let w = random_matrix(4, 1, &mut rng);
    network_check(Network::HftHlf(model), homog, heterog, 0, w, stride)
}
