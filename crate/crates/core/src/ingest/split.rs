use rand::seq::SliceRandom;
use rand::SeedableRng;

use crate::SeededRng;

/// Index partition `(train, test)` of `0..n`, each ascending.
/// `test.len() == round(test_fraction * n)`.
///
/// # Panics
/// If `test_fraction` is outside `[0, 1)`.
pub fn split_indices(n: usize, test_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    assert!(
        (0.0..1.0).contains(&test_fraction),
        "test fraction must be in [0, 1), got {test_fraction}"
    );
    let n_test = (test_fraction * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut SeededRng::seed_from_u64(seed));
    let mut test = order[..n_test].to_vec();
    let mut train = order[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    (train, test)
}

/// Random train/test partition that depends only on the inputs and `seed`.
/// Both halves keep the input order.
pub fn split_train_test<T: Clone>(items: &[T], test_fraction: f64, seed: u64) -> (Vec<T>, Vec<T>) {
    let (train, test) = split_indices(items.len(), test_fraction, seed);
    let pick = |idx: Vec<usize>| idx.into_iter().map(|i| items[i].clone()).collect();
    (pick(train), pick(test))
}
