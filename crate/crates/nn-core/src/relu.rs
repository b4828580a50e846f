use crate::scalar::Scalar;
use crate::tensor::Tensor5;

pub fn relu_forward<T: Scalar>(input: &Tensor5<T>) -> Tensor5<T> {
    let data = input
        .data()
        .iter()
        .map(|&v| if v > T::zero() { v } else { T::zero() })
        .collect();
    Tensor5::from_vec(input.shape(), data).expect("same shape")
}

/// Gradient passes only where the forward input was strictly positive.
pub fn relu_backward<T: Scalar>(grad_out: &Tensor5<T>, input: &Tensor5<T>) -> Tensor5<T> {
    assert_eq!(grad_out.shape(), input.shape(), "relu grad shape mismatch");
    let data = grad_out
        .data()
        .iter()
        .zip(input.data())
        .map(|(&g, &x)| if x > T::zero() { g } else { T::zero() })
        .collect();
    Tensor5::from_vec(input.shape(), data).expect("same shape")
}
