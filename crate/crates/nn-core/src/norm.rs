//! Batch normalization over (N, T, H, W) per channel.

use crate::error::{NnError, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnMode {
    Train,
    Eval,
}

/// Learned gain/shift plus running statistics for one batch-norm layer.
#[derive(Debug, Clone)]
pub struct BatchNorm3d<T = f32> {
    pub channels: usize,
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
    pub running_mean: Vec<T>,
    pub running_var: Vec<T>,
    pub eps: T,
    pub momentum: T,
}

/// Saved forward quantities needed by the backward pass (train mode).
pub struct BnCache<T> {
    xhat: Tensor5<T>,
    inv_std: Vec<T>,
}

impl<T: Scalar> BatchNorm3d<T> {
    /// gamma 1, beta 0, running mean 0, running var 1.
    pub fn new(channels: usize, eps: T, momentum: T) -> Self {
        BatchNorm3d {
            channels,
            gamma: vec![T::one(); channels],
            beta: vec![T::zero(); channels],
            running_mean: vec![T::zero(); channels],
            running_var: vec![T::one(); channels],
            eps,
            momentum,
        }
    }

    pub fn forward(
        &mut self,
        input: &Tensor5<T>,
        mode: BnMode,
    ) -> Result<(Tensor5<T>, Option<BnCache<T>>)> {
        let (n, c, t, h, w) = input.dims();
        if c != self.channels {
            return Err(NnError::ShapeMismatch(format!(
                "input has {} channels but batch norm expects {}",
                c, self.channels
            )));
        }
        let m = n * t * h * w;
        let plane = t * h * w;
        match mode {
            BnMode::Train => {
                if m < 2 {
                    return Err(NnError::Config(
                        "train-mode batch norm needs at least 2 elements per channel".into(),
                    ));
                }
                let m_t = T::from_f64_s(m as f64);
                let mut out = Tensor5::zeros(input.shape());
                let mut xhat = Tensor5::zeros(input.shape());
                let mut inv_std = vec![T::zero(); c];
                for ci in 0..c {
                    let mut sum = T::zero();
                    let mut sum_sq = T::zero();
                    for ni in 0..n {
                        let base = input.idx(ni, ci, 0, 0, 0);
                        for &v in &input.data()[base..base + plane] {
                            sum += v;
                            sum_sq += v * v;
                        }
                    }
                    let mean = sum / m_t;
                    let var = (sum_sq / m_t - mean * mean).max(T::zero());
                    let istd = T::one() / (var + self.eps).sqrt();
                    inv_std[ci] = istd;
                    // running stats use the unbiased variance
                    let unbiased = var * m_t / T::from_f64_s((m - 1) as f64);
                    self.running_mean[ci] = (T::one() - self.momentum) * self.running_mean[ci]
                        + self.momentum * mean;
                    self.running_var[ci] = (T::one() - self.momentum) * self.running_var[ci]
                        + self.momentum * unbiased;
                    let (g, b) = (self.gamma[ci], self.beta[ci]);
                    for ni in 0..n {
                        let base = input.idx(ni, ci, 0, 0, 0);
                        for i in base..base + plane {
                            let xh = (input.data()[i] - mean) * istd;
                            xhat.data_mut()[i] = xh;
                            out.data_mut()[i] = g * xh + b;
                        }
                    }
                }
                Ok((out, Some(BnCache { xhat, inv_std })))
            }
            BnMode::Eval => {
                let mut out = Tensor5::zeros(input.shape());
                for ci in 0..c {
                    let istd = T::one() / (self.running_var[ci] + self.eps).sqrt();
                    let mean = self.running_mean[ci];
                    let (g, b) = (self.gamma[ci], self.beta[ci]);
                    for ni in 0..n {
                        let base = input.idx(ni, ci, 0, 0, 0);
                        for i in base..base + plane {
                            out.data_mut()[i] = g * (input.data()[i] - mean) * istd + b;
                        }
                    }
                }
                Ok((out, None))
            }
        }
    }

    /// Train-mode backward. Returns (grad_input, grad_gamma, grad_beta).
    pub fn backward(
        &self,
        grad_out: &Tensor5<T>,
        cache: &BnCache<T>,
    ) -> Result<(Tensor5<T>, Vec<T>, Vec<T>)> {
        let (n, c, t, h, w) = grad_out.dims();
        if grad_out.shape() != cache.xhat.shape() {
            return Err(NnError::ShapeMismatch(format!(
                "grad_out shape {:?} does not match cached forward shape {:?}",
                grad_out.shape(),
                cache.xhat.shape()
            )));
        }
        let m = n * t * h * w;
        let m_t = T::from_f64_s(m as f64);
        let plane = t * h * w;
        let mut grad_input = Tensor5::zeros(grad_out.shape());
        let mut grad_gamma = vec![T::zero(); c];
        let mut grad_beta = vec![T::zero(); c];
        for ci in 0..c {
            let mut sum_g = T::zero();
            let mut sum_gx = T::zero();
            for ni in 0..n {
                let base = grad_out.idx(ni, ci, 0, 0, 0);
                for i in base..base + plane {
                    let g = grad_out.data()[i];
                    sum_g += g;
                    sum_gx += g * cache.xhat.data()[i];
                }
            }
            grad_beta[ci] = sum_g;
            grad_gamma[ci] = sum_gx;
            let scale = self.gamma[ci] * cache.inv_std[ci] / m_t;
            for ni in 0..n {
                let base = grad_out.idx(ni, ci, 0, 0, 0);
                for i in base..base + plane {
                    let g = grad_out.data()[i];
                    let xh = cache.xhat.data()[i];
                    grad_input.data_mut()[i] = scale * (m_t * g - sum_g - xh * sum_gx);
                }
            }
        }
        Ok((grad_input, grad_gamma, grad_beta))
    }
}
