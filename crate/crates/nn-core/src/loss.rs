//! Classification losses. Both return (scalar loss, gradient wrt logits),
//! with the gradient already averaged the same way as the loss.

use crate::error::{NnError, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor5;

fn logits_dims<T: Scalar>(logits: &Tensor5<T>) -> Result<(usize, usize)> {
    let (n, c, t, h, w) = logits.dims();
    if (t, h, w) != (1, 1, 1) {
        return Err(NnError::ShapeMismatch(format!(
            "logits must have T=H=W=1, got {:?}",
            logits.shape()
        )));
    }
    Ok((n, c))
}

/// Mean softmax cross-entropy over the batch, stabilized by max
/// subtraction. Logits are (N, K, 1, 1, 1); labels are class indices.
pub fn softmax_cross_entropy<T: Scalar>(
    logits: &Tensor5<T>,
    labels: &[usize],
) -> Result<(T, Tensor5<T>)> {
    let (n, k) = logits_dims(logits)?;
    if labels.len() != n {
        return Err(NnError::ShapeMismatch(format!(
            "{} labels for batch of {}",
            labels.len(),
            n
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
        return Err(NnError::Config(format!(
            "label {} out of range for {} classes",
            bad, k
        )));
    }
    let inv_n = T::one() / T::from_f64_s(n as f64);
    let mut loss = T::zero();
    let mut grad = Tensor5::zeros(logits.shape());
    for ni in 0..n {
        let row = &logits.data()[ni * k..(ni + 1) * k];
        let max = row.iter().cloned().fold(T::neg_infinity(), T::max);
        let mut denom = T::zero();
        for &z in row {
            denom += (z - max).exp();
        }
        let log_denom = denom.ln();
        let y = labels[ni];
        loss += (log_denom - (row[y] - max)) * inv_n;
        for ki in 0..k {
            let p = (row[ki] - max).exp() / denom;
            let delta = if ki == y { T::one() } else { T::zero() };
            grad.data_mut()[ni * k + ki] = (p - delta) * inv_n;
        }
    }
    Ok((loss, grad))
}

/// Per-class independent binary cross-entropy from logits, mean over
/// batch and classes, in the stabilized form
/// `max(z,0) - z*y + ln(1 + exp(-|z|))`.
pub fn sigmoid_bce<T: Scalar>(logits: &Tensor5<T>, targets: &Tensor5<T>) -> Result<(T, Tensor5<T>)> {
    let (n, k) = logits_dims(logits)?;
    if targets.shape() != logits.shape() {
        return Err(NnError::ShapeMismatch(format!(
            "targets shape {:?} does not match logits {:?}",
            targets.shape(),
            logits.shape()
        )));
    }
    let inv = T::one() / T::from_f64_s((n * k) as f64);
    let mut loss = T::zero();
    let mut grad = Tensor5::zeros(logits.shape());
    for i in 0..n * k {
        let z = logits.data()[i];
        let y = targets.data()[i];
        loss += (z.max(T::zero()) - z * y + (T::one() + (-z.abs()).exp()).ln()) * inv;
        let sig = T::one() / (T::one() + (-z).exp());
        grad.data_mut()[i] = (sig - y) * inv;
    }
    Ok((loss, grad))
}
