//! Weight initialization. Convolution and fc weights draw from a
//! zero-mean normal with variance 2/fan_out; biases start at zero.

use crate::scalar::Scalar;
use rand::Rng;
use rand_distr::{Distribution, Normal};

pub fn fill_normal<T: Scalar>(data: &mut [T], std: f64, rng: &mut impl Rng) {
    let dist = Normal::new(0.0, std).expect("std must be finite and non-negative");
    for v in data.iter_mut() {
        *v = T::from_f64_s(dist.sample(rng));
    }
}

/// Kaiming-style std for a conv/fc weight: sqrt(2 / fan_out).
pub fn kaiming_std(fan_out: usize) -> f64 {
    (2.0 / fan_out as f64).sqrt()
}
