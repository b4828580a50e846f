//! Fully connected head mapping pooled channel vectors to class scores.

use crate::error::{NnError, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor5;

fn check_input<T: Scalar>(input: &Tensor5<T>, in_features: usize) -> Result<(usize, usize)> {
    let (n, c, t, h, w) = input.dims();
    if (t, h, w) != (1, 1, 1) {
        return Err(NnError::ShapeMismatch(format!(
            "fully connected input must have T=H=W=1, got {:?}",
            input.shape()
        )));
    }
    if c != in_features {
        return Err(NnError::ShapeMismatch(format!(
            "input has {} features but weight expects {}",
            c, in_features
        )));
    }
    Ok((n, c))
}

/// `weight` is (out_features, in_features, 1, 1, 1); output is
/// (N, out_features, 1, 1, 1).
pub fn fc_forward<T: Scalar>(
    input: &Tensor5<T>,
    weight: &Tensor5<T>,
    bias: &[T],
) -> Result<Tensor5<T>> {
    let (o, i, _, _, _) = weight.dims();
    let (n, _) = check_input(input, i)?;
    if bias.len() != o {
        return Err(NnError::ShapeMismatch(format!(
            "bias length {} does not match {} output features",
            bias.len(),
            o
        )));
    }
    let mut out = Tensor5::zeros([n, o, 1, 1, 1]);
    // out (N x O) = input (N x I) * W^T (I x O)
    T::gemm(
        n,
        i,
        o,
        T::one(),
        input.data(),
        i as isize,
        1,
        weight.data(),
        1,
        i as isize,
        T::zero(),
        out.data_mut(),
        o as isize,
        1,
    );
    for ni in 0..n {
        for oi in 0..o {
            out.data_mut()[ni * o + oi] += bias[oi];
        }
    }
    Ok(out)
}

pub fn fc_backward<T: Scalar>(
    grad_out: &Tensor5<T>,
    input: &Tensor5<T>,
    weight: &Tensor5<T>,
) -> Result<(Tensor5<T>, Tensor5<T>, Vec<T>)> {
    let (o, i, _, _, _) = weight.dims();
    let (n, _) = check_input(input, i)?;
    if grad_out.shape() != [n, o, 1, 1, 1] {
        return Err(NnError::ShapeMismatch(format!(
            "grad_out shape {:?} does not match fc output {:?}",
            grad_out.shape(),
            [n, o, 1, 1, 1]
        )));
    }
    let mut grad_input = Tensor5::zeros(input.shape());
    let mut grad_weight = Tensor5::zeros(weight.shape());
    let mut grad_bias = vec![T::zero(); o];
    // grad_input (N x I) = grad_out (N x O) * W (O x I)
    T::gemm(
        n,
        o,
        i,
        T::one(),
        grad_out.data(),
        o as isize,
        1,
        weight.data(),
        i as isize,
        1,
        T::zero(),
        grad_input.data_mut(),
        i as isize,
        1,
    );
    // grad_W (O x I) = grad_out^T (O x N) * input (N x I)
    T::gemm(
        o,
        n,
        i,
        T::one(),
        grad_out.data(),
        1,
        o as isize,
        input.data(),
        i as isize,
        1,
        T::zero(),
        grad_weight.data_mut(),
        i as isize,
        1,
    );
    for ni in 0..n {
        for oi in 0..o {
            grad_bias[oi] += grad_out.data()[ni * o + oi];
        }
    }
    Ok((grad_input, grad_weight, grad_bias))
}
