#![allow(dead_code)]

use appraisal::ingest::{BuildingType, Decoration, Direction, PropertyRecord};
use ndarray::Array2;
use rand::Rng;

pub const FD_STEP: f64 = 1e-5;
pub const FD_TOL: f64 = 1e-4;

/// Relative error with a floor so analytically-zero gradients compare
/// against finite-difference round-off sensibly.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-5)
}

pub fn random_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-1.0..1.0))
}

/// Weighted sum used as a scalar probe loss: d/dy = weights.
pub fn probe(y: &Array2<f64>, weights: &Array2<f64>) -> f64 {
    (y * weights).sum()
}

/// Central differences of `loss` over every entry of the tensors exposed
/// by `params`, compared with `analytic` (same layout). Returns the worst
/// relative error. `stride` > 1 samples every stride-th coordinate.
pub fn check_params<M>(
    model: &mut M,
    params: for<'a> fn(&'a mut M) -> Vec<&'a mut [f64]>,
    loss: &mut dyn FnMut(&mut M) -> f64,
    analytic: &[Vec<f64>],
    stride: usize,
) -> f64 {
    let mut worst: f64 = 0.0;
    let shapes: Vec<usize> = params(model).iter().map(|p| p.len()).collect();
    assert_eq!(shapes.len(), analytic.len(), "tensor count");
    for (t, &len) in shapes.iter().enumerate() {
        assert_eq!(len, analytic[t].len(), "tensor {t} length");
        for j in (0..len).step_by(stride.max(1)) {
            let orig = params(model)[t][j];
            params(model)[t][j] = orig + FD_STEP;
            let up = loss(model);
            params(model)[t][j] = orig - FD_STEP;
            let down = loss(model);
            params(model)[t][j] = orig;
            let numeric = (up - down) / (2.0 * FD_STEP);
            worst = worst.max(rel_err(analytic[t][j], numeric));
        }
    }
    worst
}

/// Central differences with respect to every input entry.
pub fn check_input(x: &Array2<f64>, analytic: &Array2<f64>, loss: &mut dyn FnMut(&Array2<f64>) -> f64) -> f64 {
    let mut worst: f64 = 0.0;
    let mut probe_x = x.clone();
    for idx in ndarray::indices(x.dim()) {
        let orig = probe_x[idx];
        probe_x[idx] = orig + FD_STEP;
        let up = loss(&probe_x);
        probe_x[idx] = orig - FD_STEP;
        let down = loss(&probe_x);
        probe_x[idx] = orig;
        worst = worst.max(rel_err(analytic[idx], (up - down) / (2.0 * FD_STEP)));
    }
    worst
}

/// Valid record with the given location and price; other fields vary with
/// `i` so encodings are not degenerate.
pub fn record(city: &str, district: &str, residence: &str, price: f64, i: usize) -> PropertyRecord {
    PropertyRecord {
        city: city.into(),
        district: district.into(),
        residence: residence.into(),
        year: 1990 + (i % 30) as i32,
        building_type: BuildingType::ALL[i % BuildingType::ALL.len()],
        price,
        area: 40.0 + (i * 7 % 150) as f64,
        bedroom: 1 + (i % 4) as u8,
        livingroom: 1 + (i % 2) as u8,
        kitchen: 1,
        bathroom: 1 + (i % 3) as u8,
        floor: 1 + (i % 20) as i32,
        structure: ["Flat", "Duplex", "Loft"][i % 3].into(),
        decoration: Decoration::ALL[i % Decoration::ALL.len()],
        direction: Direction::ALL[i % Direction::ALL.len()],
    }
}

/// Small random city: `residences` residences spread over `districts`
/// districts, `n` records.
pub fn random_city<R: Rng>(city: &str, districts: usize, residences: usize, n: usize, rng: &mut R) -> Vec<PropertyRecord> {
    (0..n)
        .map(|i| {
            let r = if i < residences { i } else { rng.random_range(0..residences) };
            let d = r % districts;
            let mut rec = record(
                city,
                &format!("{city}-d{d}"),
                &format!("{city}-r{r}"),
                rng.random_range(2_000.0..60_000.0),
                rng.random_range(0..10_000),
            );
            rec.area = rng.random_range(20.0..300.0);
            rec
        })
        .collect()
}

/// Straight-line recomputation of rmse, mape, r2.
pub fn brute_metrics(pt: &[f64], tt: &[f64], pp: &[f64], tp: &[f64]) -> (f64, f64, f64) {
    let n = tt.len() as f64;
    let mut sse = 0.0;
    let mut ape = 0.0;
    let mut mean = 0.0;
    for i in 0..tt.len() {
        sse += (pt[i] - tt[i]) * (pt[i] - tt[i]);
        ape += ((pp[i] - tp[i]) / tp[i]).abs();
        mean += tt[i] / n;
    }
    let sst: f64 = tt.iter().map(|t| (t - mean) * (t - mean)).sum();
    ((sse / n).sqrt(), ape / n, 1.0 - sse / sst)
}
pub mod gradcheck;
