//! Fixtures driving the library's LSTM. The finite-difference check perturbs
//! parameters and re-runs the forward pass, so it necessarily calls into the
//! model under test.

use avdim_core::lstm::{backward, forward, loss, LstmModel, PredictionPair, Sample};
use rand::Rng;

use super::rng;

pub const FD_EPS: f64 = 1e-5;

/// Model with every parameter uniform in `±0.5`, so no gate sits in saturation.
pub fn random_model(d: usize, h: usize, seed: u64) -> LstmModel {
    let mut r = rng(seed);
    let mut m = LstmModel::zeros(d, h);
    m.params_mut().for_each(|p| *p = r.random_range(-0.5..0.5));
    m
}

pub fn random_sequence(t: usize, d: usize, r: &mut impl Rng) -> Vec<Vec<f64>> {
    (0..t).map(|_| (0..d).map(|_| r.random_range(-1.0..1.0)).collect()).collect()
}

pub fn random_label(r: &mut impl Rng) -> PredictionPair {
    PredictionPair::new(r.random_range(-2.0..2.0), r.random_range(-2.0..2.0))
}

/// Denominator floor for the relative error. Central differences of step
/// `FD_EPS` carry roughly 1e-11 of rounding noise, which swamps components
/// much below this.
pub const REL_FLOOR: f64 = 1e-6;

fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(REL_FLOOR)
}

/// Largest `|analytic - numeric| / max(|analytic|, |numeric|, REL_FLOOR)` over all
/// parameters, with the numeric gradient from central differences of step `FD_EPS`.
pub fn max_gradient_error(model: &LstmModel, seq: &[Vec<f64>], label: PredictionPair) -> f64 {
    let (_, cache) = forward(model, seq).unwrap();
    let analytic: Vec<f64> = backward(model, &cache, label).unwrap().params().collect();
    let objective = |m: &LstmModel| loss(forward(m, seq).unwrap().0, label);
    let mut worst: f64 = 0.0;
    let mut probe = model.clone();
    for (k, a) in analytic.iter().enumerate() {
        let original = model.params().nth(k).unwrap();
        *probe.params_mut().nth(k).unwrap() = original + FD_EPS;
        let up = objective(&probe);
        *probe.params_mut().nth(k).unwrap() = original - FD_EPS;
        let down = objective(&probe);
        *probe.params_mut().nth(k).unwrap() = original;
        worst = worst.max(rel_err(*a, (up - down) / (2.0 * FD_EPS)));
    }
    worst
}

/// One random instance: T in 1..=5, H in 1..=8, D in 1..=6.
pub fn gradient_instance(seed: u64) -> f64 {
    let mut r = rng(seed ^ 0x9e37_79b9);
    let t = r.random_range(1..=5);
    let h = r.random_range(1..=8);
    let d = r.random_range(1..=6);
    let model = random_model(d, h, seed);
    let seq = random_sequence(t, d, &mut r);
    let label = random_label(&mut r);
    max_gradient_error(&model, &seq, label)
}

/// Eight short sequences with arbitrary targets.
pub fn overfit_fixture() -> Vec<Sample> {
    let mut r = rng(2024);
    (0..8)
        .map(|_| {
            let t = r.random_range(3..=6);
            (random_sequence(t, 5, &mut r), random_label(&mut r))
        })
        .collect()
}
