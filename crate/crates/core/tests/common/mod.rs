#![allow(dead_code)]

use hybridfg::discrete::{DiscreteFactor, DiscreteKey};
use hybridfg::elimination::Ordering;
use hybridfg::gaussian::{JacobianFactor, NoiseModel};
use hybridfg::hybrid::{HybridGaussianFactor, HybridGaussianFactorGraph};
use hybridfg::Key;
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn x(i: u64) -> Key {
    Key::symbol('x', i)
}

pub fn m(i: u64) -> DiscreteKey {
    DiscreteKey::binary(Key::symbol('m', i))
}

pub fn scalar(v: f64) -> DMatrix<f64> {
    DMatrix::from_element(1, 1, v)
}

/// Prior N(x; 0, 1) plus a measurement z = 1 = x + μ_m + ε, μ ∈ {0, 4}, σ = 1.
pub fn worked_example() -> HybridGaussianFactorGraph<f64> {
    let mut g = HybridGaussianFactorGraph::new();
    g.push(JacobianFactor::new(vec![(x(0), scalar(1.0))], DVector::zeros(1)).unwrap());
    let model = |mu: f64| (vec![(x(0), scalar(1.0))], DVector::from_element(1, 1.0 - mu), NoiseModel::unit(1).unwrap());
    g.push(HybridGaussianFactor::from_measurements(&[m(0)], vec![model(0.0), model(4.0)]).unwrap());
    g
}

/// `1 / (1 + e⁻²)`: the likelihood ratio of N(1; 0, 2) to N(1; 4, 2) is e².
pub const WORKED_P0: f64 = 0.880_797_077_977_882_3;

/// Random hybrid graph with up to `max_x` scalar continuous variables and
/// up to `max_modes` binary modes. Every variable has a prior, so each mode
/// is well posed.
pub fn random_graph(rng: &mut impl Rng, max_x: usize, max_modes: usize) -> HybridGaussianFactorGraph<f64> {
    let nx = rng.random_range(1..=max_x);
    let nm = rng.random_range(0..=max_modes);
    let mut g = HybridGaussianFactorGraph::new();
    for i in 0..nx {
        let a = rng.random_range(0.5..2.0);
        let b = rng.random_range(-2.0..2.0);
        g.push(JacobianFactor::new(vec![(x(i as u64), scalar(a))], DVector::from_element(1, b)).unwrap());
    }
    for i in 1..nx {
        if rng.random_bool(0.7) {
            let blocks = vec![
                (x(i as u64 - 1), scalar(rng.random_range(-2.0..2.0))),
                (x(i as u64), scalar(rng.random_range(-2.0..2.0))),
            ];
            g.push(JacobianFactor::new(blocks, DVector::from_element(1, rng.random_range(-2.0..2.0))).unwrap());
        }
    }
    for j in 0..nm {
        let mut modes = vec![m(j as u64)];
        if j > 0 && rng.random_bool(0.3) {
            modes.push(m(rng.random_range(0..j) as u64));
        }
        let mut vars: Vec<u64> = (0..nx as u64).collect();
        vars.shuffle(rng);
        vars.truncate(rng.random_range(1..=nx.min(2)));
        let rows = rng.random_range(1..=2);
        let leaves = 1 << modes.len();
        let models = (0..leaves)
            .map(|_| {
                let blocks = vars
                    .iter()
                    .map(|v| (x(*v), DMatrix::from_fn(rows, 1, |_, _| rng.random_range(-2.0..2.0))))
                    .collect();
                let z = DVector::from_fn(rows, |_, _| rng.random_range(-3.0..3.0));
                let sigmas: Vec<f64> = (0..rows).map(|_| rng.random_range(0.3..2.0)).collect();
                (blocks, z, NoiseModel::diagonal(&sigmas).unwrap())
            })
            .collect();
        g.push(HybridGaussianFactor::from_measurements(&modes, models).unwrap());
        if rng.random_bool(0.4) {
            let p = vec![rng.random_range(0.1..1.0), rng.random_range(0.1..1.0)];
            g.push(DiscreteFactor::from_values(&[m(j as u64)], p).unwrap());
        }
    }
    g
}

/// A uniformly shuffled strong ordering of `g`.
pub fn random_ordering(g: &HybridGaussianFactorGraph<f64>, rng: &mut impl Rng) -> Ordering {
    let mut continuous: Vec<Key> = g.continuous_keys().unwrap().into_keys().collect();
    let mut discrete: Vec<Key> = g.discrete_keys().unwrap().into_iter().map(|k| k.key).collect();
    continuous.shuffle(rng);
    discrete.shuffle(rng);
    Ordering::new(continuous, discrete)
}
