#![allow(dead_code)]

use cgwave_core::verify::decaying_test_function;
use cgwave_core::{Discretization, FlowParameters, TrigSeries, WaveOperators};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn params(gamma: f64, sigma: f64) -> FlowParameters {
    FlowParameters::new(1.0, 1.0, 9.81, gamma, sigma).unwrap()
}

pub fn ops(p: FlowParameters, order: usize) -> WaveOperators {
    WaveOperators::new(p, Discretization::new(order).unwrap()).unwrap()
}

/// Even zero-mean profiles with geometrically decaying coefficients.
pub fn test_functions(seed: u64, count: usize, order: usize) -> Vec<TrigSeries> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let amplitude = rng.gen_range(0.05..0.3);
            let ratio = rng.gen_range(0.3..0.6);
            let u: Vec<f64> = (0..order).map(|_| rng.gen()).collect();
            decaying_test_function(amplitude, ratio, &u)
        })
        .collect()
}

pub fn lambdas(seed: u64, count: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.gen_range(lo..hi)).collect()
}
