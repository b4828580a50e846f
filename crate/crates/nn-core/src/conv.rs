//! 3D convolution with zero padding, implemented as im2col + GEMM.

use crate::error::{NnError, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor5;
use serde::{Deserialize, Serialize};

/// Static description of a 3D convolution layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conv3dSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    /// (kt, kh, kw)
    pub kernel: (usize, usize, usize),
    /// (st, sh, sw)
    pub stride: (usize, usize, usize),
    /// (pt, ph, pw)
    pub padding: (usize, usize, usize),
    pub bias: bool,
}

impl Conv3dSpec {
    pub fn weight_shape(&self) -> [usize; 5] {
        let (kt, kh, kw) = self.kernel;
        [self.out_channels, self.in_channels, kt, kh, kw]
    }

    pub fn validate(&self) -> Result<()> {
        let (kt, kh, kw) = self.kernel;
        let (st, sh, sw) = self.stride;
        if kt == 0 || kh == 0 || kw == 0 || st == 0 || sh == 0 || sw == 0 {
            return Err(NnError::Config(format!(
                "kernel and stride must be >= 1 in every dimension, got kernel {:?} stride {:?}",
                self.kernel, self.stride
            )));
        }
        if self.in_channels == 0 || self.out_channels == 0 {
            return Err(NnError::Config("channel counts must be >= 1".into()));
        }
        Ok(())
    }
}

/// Output extent of one dimension: floor((L + 2p - k) / s) + 1.
pub fn conv_out_len(len: usize, k: usize, s: usize, p: usize) -> Result<usize> {
    let padded = len + 2 * p;
    if padded < k {
        return Err(NnError::Config(format!(
            "padded extent {} smaller than kernel {}",
            padded, k
        )));
    }
    Ok((padded - k) / s + 1)
}

fn out_dims(
    input: &Tensor5<impl Scalar>,
    kernel: (usize, usize, usize),
    stride: (usize, usize, usize),
    padding: (usize, usize, usize),
) -> Result<(usize, usize, usize)> {
    let (_, _, t, h, w) = input.dims();
    Ok((
        conv_out_len(t, kernel.0, stride.0, padding.0)?,
        conv_out_len(h, kernel.1, stride.1, padding.1)?,
        conv_out_len(w, kernel.2, stride.2, padding.2)?,
    ))
}

/// Scatter the input slice of one sample into the patch matrix
/// (rows = C*kt*kh*kw, cols = To*Ho*Wo). `col` must be zeroed by the
/// caller; padded positions stay zero.
#[allow(clippy::too_many_arguments)]
fn im2col<T: Scalar>(
    input: &[T],
    (c, t, h, w): (usize, usize, usize, usize),
    kernel: (usize, usize, usize),
    stride: (usize, usize, usize),
    padding: (usize, usize, usize),
    (to, ho, wo): (usize, usize, usize),
    col: &mut [T],
) {
    let (kt, kh, kw) = kernel;
    let (st, sh, sw) = stride;
    let (pt, ph, pw) = padding;
    let cols = to * ho * wo;
    for ci in 0..c {
        for dt in 0..kt {
            for dh in 0..kh {
                for dw in 0..kw {
                    let row = ((ci * kt + dt) * kh + dh) * kw + dw;
                    let row_base = row * cols;
                    for ot in 0..to {
                        let it = (ot * st + dt) as isize - pt as isize;
                        if it < 0 || it >= t as isize {
                            continue;
                        }
                        for oh in 0..ho {
                            let ih = (oh * sh + dh) as isize - ph as isize;
                            if ih < 0 || ih >= h as isize {
                                continue;
                            }
                            for ow in 0..wo {
                                let iw = (ow * sw + dw) as isize - pw as isize;
                                if iw < 0 || iw >= w as isize {
                                    continue;
                                }
                                col[row_base + (ot * ho + oh) * wo + ow] = input
                                    [((ci * t + it as usize) * h + ih as usize) * w + iw as usize];
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Inverse of [`im2col`]: accumulate patch-matrix gradients back into the
/// (unpadded) input gradient of one sample.
#[allow(clippy::too_many_arguments)]
fn col2im<T: Scalar>(
    col: &[T],
    (c, t, h, w): (usize, usize, usize, usize),
    kernel: (usize, usize, usize),
    stride: (usize, usize, usize),
    padding: (usize, usize, usize),
    (to, ho, wo): (usize, usize, usize),
    grad_input: &mut [T],
) {
    let (kt, kh, kw) = kernel;
    let (st, sh, sw) = stride;
    let (pt, ph, pw) = padding;
    let cols = to * ho * wo;
    for ci in 0..c {
        for dt in 0..kt {
            for dh in 0..kh {
                for dw in 0..kw {
                    let row = ((ci * kt + dt) * kh + dh) * kw + dw;
                    let row_base = row * cols;
                    for ot in 0..to {
                        let it = (ot * st + dt) as isize - pt as isize;
                        if it < 0 || it >= t as isize {
                            continue;
                        }
                        for oh in 0..ho {
                            let ih = (oh * sh + dh) as isize - ph as isize;
                            if ih < 0 || ih >= h as isize {
                                continue;
                            }
                            for ow in 0..wo {
                                let iw = (ow * sw + dw) as isize - pw as isize;
                                if iw < 0 || iw >= w as isize {
                                    continue;
                                }
                                grad_input[((ci * t + it as usize) * h + ih as usize) * w
                                    + iw as usize] += col[row_base + (ot * ho + oh) * wo + ow];
                            }
                        }
                    }
                }
            }
        }
    }
}

fn check_weight<T: Scalar>(
    input: &Tensor5<T>,
    weight: &Tensor5<T>,
    kernel: (usize, usize, usize),
) -> Result<()> {
    let (_, c, _, _, _) = input.dims();
    let (o, wi, wkt, wkh, wkw) = weight.dims();
    if wi != c {
        return Err(NnError::ShapeMismatch(format!(
            "input has {} channels but weight expects {}",
            c, wi
        )));
    }
    if (wkt, wkh, wkw) != kernel || o == 0 {
        return Err(NnError::ShapeMismatch(format!(
            "weight kernel dims ({},{},{}) do not match spec kernel {:?}",
            wkt, wkh, wkw, kernel
        )));
    }
    Ok(())
}

/// Forward 3D convolution. Weight layout is `(O, I, kt, kh, kw)`.
pub fn conv3d_forward<T: Scalar>(
    input: &Tensor5<T>,
    weight: &Tensor5<T>,
    bias: Option<&[T]>,
    stride: (usize, usize, usize),
    padding: (usize, usize, usize),
) -> Result<Tensor5<T>> {
    let (n, c, t, h, w) = input.dims();
    let (o, _, kt, kh, kw) = weight.dims();
    check_weight(input, weight, (kt, kh, kw))?;
    if let Some(b) = bias {
        if b.len() != o {
            return Err(NnError::ShapeMismatch(format!(
                "bias length {} does not match {} output channels",
                b.len(),
                o
            )));
        }
    }
    let (to, ho, wo) = out_dims(input, (kt, kh, kw), stride, padding)?;
    let cols = to * ho * wo;
    let k_rows = c * kt * kh * kw;

    let mut output = Tensor5::zeros([n, o, to, ho, wo]);
    let mut col = vec![T::zero(); k_rows * cols];
    let in_stride = c * t * h * w;
    let out_stride = o * cols;
    for ni in 0..n {
        col.iter_mut().for_each(|v| *v = T::zero());
        im2col(
            &input.data()[ni * in_stride..(ni + 1) * in_stride],
            (c, t, h, w),
            (kt, kh, kw),
            stride,
            padding,
            (to, ho, wo),
            &mut col,
        );
        let out_n = &mut output.data_mut()[ni * out_stride..(ni + 1) * out_stride];
        T::gemm(
            o,
            k_rows,
            cols,
            T::one(),
            weight.data(),
            k_rows as isize,
            1,
            &col,
            cols as isize,
            1,
            T::zero(),
            out_n,
            cols as isize,
            1,
        );
        if let Some(b) = bias {
            for (oc, bv) in b.iter().enumerate() {
                for v in &mut out_n[oc * cols..(oc + 1) * cols] {
                    *v += *bv;
                }
            }
        }
    }
    Ok(output)
}

/// Gradients of the convolution wrt input, weight and bias.
///
/// `grad_weight` / `grad_bias` are freshly allocated here; callers that
/// accumulate across batches add them into their own buffers.
pub fn conv3d_backward<T: Scalar>(
    grad_out: &Tensor5<T>,
    input: &Tensor5<T>,
    weight: &Tensor5<T>,
    has_bias: bool,
    stride: (usize, usize, usize),
    padding: (usize, usize, usize),
) -> Result<(Tensor5<T>, Tensor5<T>, Option<Vec<T>>)> {
    let (n, c, t, h, w) = input.dims();
    let (o, _, kt, kh, kw) = weight.dims();
    check_weight(input, weight, (kt, kh, kw))?;
    let (to, ho, wo) = out_dims(input, (kt, kh, kw), stride, padding)?;
    if grad_out.shape() != [n, o, to, ho, wo] {
        return Err(NnError::ShapeMismatch(format!(
            "grad_out shape {:?} does not match forward output {:?}",
            grad_out.shape(),
            [n, o, to, ho, wo]
        )));
    }
    let cols = to * ho * wo;
    let k_rows = c * kt * kh * kw;

    let mut grad_input = Tensor5::zeros(input.shape());
    let mut grad_weight = Tensor5::zeros(weight.shape());
    let mut grad_bias = if has_bias {
        Some(vec![T::zero(); o])
    } else {
        None
    };

    let mut col = vec![T::zero(); k_rows * cols];
    let mut grad_col = vec![T::zero(); k_rows * cols];
    let in_stride = c * t * h * w;
    let out_stride = o * cols;
    for ni in 0..n {
        let go_n = &grad_out.data()[ni * out_stride..(ni + 1) * out_stride];
        col.iter_mut().for_each(|v| *v = T::zero());
        im2col(
            &input.data()[ni * in_stride..(ni + 1) * in_stride],
            (c, t, h, w),
            (kt, kh, kw),
            stride,
            padding,
            (to, ho, wo),
            &mut col,
        );
        // grad_W += grad_out (O x P) * col^T (P x K)
        T::gemm(
            o,
            cols,
            k_rows,
            T::one(),
            go_n,
            cols as isize,
            1,
            &col,
            1,
            cols as isize,
            T::one(),
            grad_weight.data_mut(),
            k_rows as isize,
            1,
        );
        // grad_col = W^T (K x O) * grad_out (O x P)
        T::gemm(
            k_rows,
            o,
            cols,
            T::one(),
            weight.data(),
            1,
            k_rows as isize,
            go_n,
            cols as isize,
            1,
            T::zero(),
            &mut grad_col,
            cols as isize,
            1,
        );
        col2im(
            &grad_col,
            (c, t, h, w),
            (kt, kh, kw),
            stride,
            padding,
            (to, ho, wo),
            &mut grad_input.data_mut()[ni * in_stride..(ni + 1) * in_stride],
        );
        if let Some(gb) = grad_bias.as_mut() {
            for oc in 0..o {
                let mut s = T::zero();
                for v in &go_n[oc * cols..(oc + 1) * cols] {
                    s += *v;
                }
                gb[oc] += s;
            }
        }
    }
    Ok((grad_input, grad_weight, grad_bias))
}
