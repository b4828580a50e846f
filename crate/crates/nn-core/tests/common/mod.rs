// shared across several test targets; not every target uses every helper
#![allow(dead_code)]

use nn_core::tensor::Tensor5;
use nn_core::Scalar;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor<T: Scalar>(shape: [usize; 5], rng: &mut impl Rng) -> Tensor5<T> {
    let data = (0..shape.iter().product())
        .map(|_| T::from_f64_s(rng.gen_range(-1.0..1.0)))
        .collect();
    Tensor5::from_vec(shape, data).unwrap()
}

/// Normalized infinity-norm discrepancy between two gradients.
pub fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0f64, f64::max);
    let scale = a
        .iter()
        .chain(b)
        .map(|x| x.abs())
        .fold(0.0f64, f64::max)
        .max(1e-8);
    diff / scale
}

/// Central finite differences of a scalar function of a flat vector.
pub fn numeric_grad(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], step: f64) -> Vec<f64> {
    let mut x = x.to_vec();
    let mut grad = vec![0.0; x.len()];
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + step;
        let fp = f(&x);
        x[i] = orig - step;
        let fm = f(&x);
        x[i] = orig;
        grad[i] = (fp - fm) / (2.0 * step);
    }
    grad
}
