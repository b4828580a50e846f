//! First-order optimizers operating in place on flat parameter slices.
//!
//! Auxiliary buffers are allocated lazily on the first step and keyed by
//! position in the parameter list, so callers must pass parameters in a
//! stable order.

use crate::error::{NnError, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct Sgd<T: Scalar> {
    pub lr: T,
    pub momentum: T,
    /// Decoupled weight decay: applied directly to the parameter, not
    /// folded into the gradient.
    pub weight_decay: T,
    velocity: Vec<Vec<T>>,
    step: u64,
}

impl<T: Scalar> Sgd<T> {
    pub fn new(lr: T, momentum: T, weight_decay: T) -> Self {
        Sgd {
            lr,
            momentum,
            weight_decay,
            velocity: Vec::new(),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, params: &mut [(&mut [T], &[T])]) -> Result<()> {
        if self.velocity.is_empty() {
            self.velocity = params.iter().map(|(p, _)| vec![T::zero(); p.len()]).collect();
        }
        check_buffers(params, self.velocity.iter().map(Vec::len))?;
        self.step += 1;
        for ((param, grad), vel) in params.iter_mut().zip(&mut self.velocity) {
            let decay = T::one() - self.lr * self.weight_decay;
            for i in 0..param.len() {
                vel[i] = self.momentum * vel[i] + grad[i];
                param[i] = param[i] * decay - self.lr * vel[i];
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Adam<T: Scalar> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    pub weight_decay: T,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
    step: u64,
}

impl<T: Scalar> Adam<T> {
    pub fn new(lr: T, weight_decay: T) -> Self {
        Adam {
            lr,
            beta1: T::from_f64_s(0.9),
            beta2: T::from_f64_s(0.999),
            eps: T::from_f64_s(1e-8),
            weight_decay,
            m: Vec::new(),
            v: Vec::new(),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, params: &mut [(&mut [T], &[T])]) -> Result<()> {
        if self.m.is_empty() {
            self.m = params.iter().map(|(p, _)| vec![T::zero(); p.len()]).collect();
            self.v = self.m.clone();
        }
        check_buffers(params, self.m.iter().map(Vec::len))?;
        self.step += 1;
        let t = self.step as i32;
        let bc1 = T::one() - self.beta1.powi(t);
        let bc2 = T::one() - self.beta2.powi(t);
        for (idx, (param, grad)) in params.iter_mut().enumerate() {
            let decay = T::one() - self.lr * self.weight_decay;
            let (m, v) = (&mut self.m[idx], &mut self.v[idx]);
            for i in 0..param.len() {
                let g = grad[i];
                m[i] = self.beta1 * m[i] + (T::one() - self.beta1) * g;
                v[i] = self.beta2 * v[i] + (T::one() - self.beta2) * g * g;
                let mhat = m[i] / bc1;
                let vhat = v[i] / bc2;
                param[i] = param[i] * decay - self.lr * mhat / (vhat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

fn check_buffers<T: Scalar>(
    params: &[(&mut [T], &[T])],
    buf_lens: impl ExactSizeIterator<Item = usize>,
) -> Result<()> {
    if params.len() != buf_lens.len() {
        return Err(NnError::Config(format!(
            "optimizer saw {} parameters but has state for {}",
            params.len(),
            buf_lens.len()
        )));
    }
    for (i, ((p, g), bl)) in params.iter().zip(buf_lens).enumerate() {
        if p.len() != g.len() || p.len() != bl {
            return Err(NnError::ShapeMismatch(format!(
                "parameter {}: data {} / grad {} / state {} lengths differ",
                i,
                p.len(),
                g.len(),
                bl
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub enum Optimizer<T: Scalar> {
    Sgd(Sgd<T>),
    Adam(Adam<T>),
}

impl<T: Scalar> Optimizer<T> {
    pub fn step(&mut self, params: &mut [(&mut [T], &[T])]) -> Result<()> {
        match self {
            Optimizer::Sgd(o) => o.step(params),
            Optimizer::Adam(o) => o.step(params),
        }
    }

    pub fn set_lr(&mut self, lr: T) {
        match self {
            Optimizer::Sgd(o) => o.lr = lr,
            Optimizer::Adam(o) => o.lr = lr,
        }
    }

    pub fn step_count(&self) -> u64 {
        match self {
            Optimizer::Sgd(o) => o.step_count(),
            Optimizer::Adam(o) => o.step_count(),
        }
    }
}
