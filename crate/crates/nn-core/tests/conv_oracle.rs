//! Forward convolution against an independent direct-loop oracle.

mod common;

use common::{random_tensor, rng};
use nn_core::conv::conv3d_forward;
use nn_core::tensor::Tensor5;
use rand::Rng;

/// Seven nested loops, written straight from the definition of a strided
/// zero-padded cross-correlation. Independent of the im2col kernel.
fn conv3d_reference(
    input: &Tensor5<f32>,
    weight: &Tensor5<f32>,
    bias: Option<&[f32]>,
    stride: (usize, usize, usize),
    padding: (usize, usize, usize),
) -> Tensor5<f32> {
    let (n, c, t, h, w) = input.dims();
    let (o, _, kt, kh, kw) = weight.dims();
    let (st, sh, sw) = stride;
    let (pt, ph, pw) = padding;
    let to = (t + 2 * pt - kt) / st + 1;
    let ho = (h + 2 * ph - kh) / sh + 1;
    let wo = (w + 2 * pw - kw) / sw + 1;
    let mut out = Tensor5::zeros([n, o, to, ho, wo]);
    for ni in 0..n {
        for oc in 0..o {
            for ot in 0..to {
                for oh in 0..ho {
                    for ow in 0..wo {
                        let mut acc = bias.map(|b| b[oc]).unwrap_or(0.0);
                        for ic in 0..c {
                            for dt in 0..kt {
                                for dh in 0..kh {
                                    for dw in 0..kw {
                                        let it = (ot * st + dt) as isize - pt as isize;
                                        let ih = (oh * sh + dh) as isize - ph as isize;
                                        let iw = (ow * sw + dw) as isize - pw as isize;
                                        if it < 0
                                            || ih < 0
                                            || iw < 0
                                            || it >= t as isize
                                            || ih >= h as isize
                                            || iw >= w as isize
                                        {
                                            continue;
                                        }
                                        acc += input.at(
                                            ni,
                                            ic,
                                            it as usize,
                                            ih as usize,
                                            iw as usize,
                                        ) * weight.at(oc, ic, dt, dh, dw);
                                    }
                                }
                            }
                        }
                        *out.at_mut(ni, oc, ot, oh, ow) = acc;
                    }
                }
            }
        }
    }
    out
}

#[test]
fn sum_kernel_on_known_sequence() {
    let input = Tensor5::from_vec([1, 1, 3, 1, 1], vec![1.0f32, 2.0, 3.0]).unwrap();
    let weight = Tensor5::full([1, 1, 3, 1, 1], 1.0f32);
    let out = conv3d_forward(&input, &weight, None, (1, 1, 1), (0, 0, 0)).unwrap();
    assert_eq!(out.shape(), [1, 1, 1, 1, 1]);
    assert!((out.data()[0] - 6.0).abs() < 1e-6);
}

#[test]
fn temporal_length_64_kernel_3_no_pad_gives_62() {
    let input = Tensor5::<f32>::zeros([1, 1, 64, 3, 3]);
    let weight = Tensor5::full([1, 1, 3, 3, 3], 0.5f32);
    let out = conv3d_forward(&input, &weight, None, (1, 1, 1), (0, 0, 0)).unwrap();
    assert_eq!(out.shape()[2], 62);
}

#[test]
fn channel_mismatch_is_a_descriptive_error() {
    let input = Tensor5::<f32>::zeros([1, 2, 4, 4, 4]);
    let weight = Tensor5::<f32>::zeros([3, 5, 1, 1, 1]);
    let err = conv3d_forward(&input, &weight, None, (1, 1, 1), (0, 0, 0)).unwrap_err();
    assert!(err.to_string().contains("channels"));
}

#[test]
fn matches_reference_on_fixed_random_case() {
    let mut r = rng(11);
    let input = random_tensor::<f32>([2, 3, 8, 6, 6], &mut r);
    let weight = random_tensor::<f32>([4, 3, 3, 3, 3], &mut r);
    let got = conv3d_forward(&input, &weight, None, (1, 1, 1), (1, 1, 1)).unwrap();
    let want = conv3d_reference(&input, &weight, None, (1, 1, 1), (1, 1, 1));
    for (a, b) in got.data().iter().zip(want.data()) {
        assert!((a - b).abs() <= 1e-5 * b.abs().max(1.0));
    }
}

#[test]
fn matches_reference_on_100_random_configurations() {
    let mut r = rng(42);
    for case in 0..100 {
        let n = r.gen_range(1..=2);
        let c = r.gen_range(1..=3);
        let o = r.gen_range(1..=4);
        let kernel: (usize, usize, usize) =
            (r.gen_range(1..=3), r.gen_range(1..=3), r.gen_range(1..=3));
        let stride = (r.gen_range(1..=3), r.gen_range(1..=3), r.gen_range(1..=3));
        let padding: (usize, usize, usize) =
            (r.gen_range(0..=2), r.gen_range(0..=2), r.gen_range(0..=2));
        let t = r.gen_range(kernel.0.saturating_sub(2 * padding.0).max(1)..=8);
        let h = r.gen_range(kernel.1.saturating_sub(2 * padding.1).max(1)..=7);
        let w = r.gen_range(kernel.2.saturating_sub(2 * padding.2).max(1)..=7);
        let input = random_tensor::<f32>([n, c, t, h, w], &mut r);
        let weight = random_tensor::<f32>([o, c, kernel.0, kernel.1, kernel.2], &mut r);
        let bias: Vec<f32> = (0..o).map(|_| r.gen_range(-0.5..0.5)).collect();
        let got = conv3d_forward(&input, &weight, Some(&bias), stride, padding).unwrap();
        let want = conv3d_reference(&input, &weight, Some(&bias), stride, padding);
        assert_eq!(got.shape(), want.shape(), "case {case}");
        for (a, b) in got.data().iter().zip(want.data()) {
            assert!(
                (a - b).abs() <= 1e-5 * b.abs().max(1.0),
                "case {case}: {a} vs {b}"
            );
        }
        assert!(got.all_finite());
    }
}
