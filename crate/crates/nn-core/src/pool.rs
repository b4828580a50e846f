//! Max pooling and global average pooling over (T, H, W).

use crate::conv::conv_out_len;
use crate::error::{NnError, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor5;

/// Max pool with zero-pad-as-minus-infinity semantics. Ties break toward
/// the earliest index in (t, h, w) scan order. Returns the pooled tensor
/// and, per output element, the flat index of the winning input element.
pub fn maxpool3d_forward<T: Scalar>(
    input: &Tensor5<T>,
    kernel: (usize, usize, usize),
    stride: (usize, usize, usize),
    padding: (usize, usize, usize),
) -> Result<(Tensor5<T>, Vec<usize>)> {
    let (n, c, t, h, w) = input.dims();
    let (kt, kh, kw) = kernel;
    let (st, sh, sw) = stride;
    let (pt, ph, pw) = padding;
    if kt == 0 || kh == 0 || kw == 0 || st == 0 || sh == 0 || sw == 0 {
        return Err(NnError::Config("pool kernel/stride must be >= 1".into()));
    }
    if pt >= kt || ph >= kh || pw >= kw {
        return Err(NnError::Config(
            "pool padding must be smaller than the kernel".into(),
        ));
    }
    let to = conv_out_len(t, kt, st, pt)?;
    let ho = conv_out_len(h, kh, sh, ph)?;
    let wo = conv_out_len(w, kw, sw, pw)?;

    let mut out = Tensor5::zeros([n, c, to, ho, wo]);
    let mut argmax = vec![0usize; n * c * to * ho * wo];
    let mut oi = 0usize;
    for ni in 0..n {
        for ci in 0..c {
            for ot in 0..to {
                for oh in 0..ho {
                    for ow in 0..wo {
                        let mut best = T::neg_infinity();
                        let mut best_idx = usize::MAX;
                        for dt in 0..kt {
                            let it = (ot * st + dt) as isize - pt as isize;
                            if it < 0 || it >= t as isize {
                                continue;
                            }
                            for dh in 0..kh {
                                let ih = (oh * sh + dh) as isize - ph as isize;
                                if ih < 0 || ih >= h as isize {
                                    continue;
                                }
                                for dw in 0..kw {
                                    let iw = (ow * sw + dw) as isize - pw as isize;
                                    if iw < 0 || iw >= w as isize {
                                        continue;
                                    }
                                    let idx = input.idx(
                                        ni,
                                        ci,
                                        it as usize,
                                        ih as usize,
                                        iw as usize,
                                    );
                                    let v = input.data()[idx];
                                    if v > best {
                                        best = v;
                                        best_idx = idx;
                                    }
                                }
                            }
                        }
                        // padding < kernel guarantees at least one valid element
                        debug_assert!(best_idx != usize::MAX);
                        out.data_mut()[oi] = best;
                        argmax[oi] = best_idx;
                        oi += 1;
                    }
                }
            }
        }
    }
    Ok((out, argmax))
}

/// Routes each output gradient to the argmax position recorded in forward.
pub fn maxpool3d_backward<T: Scalar>(
    grad_out: &Tensor5<T>,
    argmax: &[usize],
    input_shape: [usize; 5],
) -> Result<Tensor5<T>> {
    if grad_out.len() != argmax.len() {
        return Err(NnError::ShapeMismatch(format!(
            "grad_out has {} elements but argmax table has {}",
            grad_out.len(),
            argmax.len()
        )));
    }
    let mut grad_input = Tensor5::zeros(input_shape);
    for (g, &idx) in grad_out.data().iter().zip(argmax) {
        grad_input.data_mut()[idx] += *g;
    }
    Ok(grad_input)
}

/// Collapse (T, H, W) to a single unit per channel by averaging.
pub fn global_avg_pool<T: Scalar>(input: &Tensor5<T>) -> Tensor5<T> {
    let (n, c, t, h, w) = input.dims();
    let m = t * h * w;
    let inv = T::one() / T::from_f64_s(m as f64);
    let mut out = Tensor5::zeros([n, c, 1, 1, 1]);
    for ni in 0..n {
        for ci in 0..c {
            let base = input.idx(ni, ci, 0, 0, 0);
            let mut s = T::zero();
            for v in &input.data()[base..base + m] {
                s += *v;
            }
            *out.at_mut(ni, ci, 0, 0, 0) = s * inv;
        }
    }
    out
}

pub fn global_avg_pool_backward<T: Scalar>(
    grad_out: &Tensor5<T>,
    input_shape: [usize; 5],
) -> Result<Tensor5<T>> {
    let [n, c, t, h, w] = input_shape;
    if grad_out.shape() != [n, c, 1, 1, 1] {
        return Err(NnError::ShapeMismatch(format!(
            "grad_out shape {:?} does not match pooled shape {:?}",
            grad_out.shape(),
            [n, c, 1, 1, 1]
        )));
    }
    let m = t * h * w;
    let inv = T::one() / T::from_f64_s(m as f64);
    let mut grad_input = Tensor5::zeros(input_shape);
    for ni in 0..n {
        for ci in 0..c {
            let g = grad_out.at(ni, ci, 0, 0, 0) * inv;
            let base = grad_input.idx(ni, ci, 0, 0, 0);
            for v in &mut grad_input.data_mut()[base..base + m] {
                *v = g;
            }
        }
    }
    Ok(grad_input)
}
