//! Finite-difference verification of every analytic backward pass.
//!
//! The scalar under test is `sum(forward(x) * R)` for a fixed random
//! projection tensor `R`; its analytic gradient is `backward(R)`.
//! Verification runs in f64 with central differences (step 1e-4) and a
//! normalized tolerance of 1e-5; one f32 spot check uses 1e-3.

mod common;

use common::{numeric_grad, random_tensor, rel_error, rng};
use nn_core::conv::{conv3d_backward, conv3d_forward};
use nn_core::linear::{fc_backward, fc_forward};
use nn_core::loss::{sigmoid_bce, softmax_cross_entropy};
use nn_core::norm::{BatchNorm3d, BnMode};
use nn_core::pool::{
    global_avg_pool, global_avg_pool_backward, maxpool3d_backward, maxpool3d_forward,
};
use nn_core::relu::{relu_backward, relu_forward};
use nn_core::tensor::Tensor5;
use rand::Rng;

const STEP: f64 = 1e-4;
const TOL: f64 = 1e-5;

fn dot(a: &Tensor5<f64>, r: &Tensor5<f64>) -> f64 {
    a.data().iter().zip(r.data()).map(|(x, y)| x * y).sum()
}

#[test]
fn conv3d_gradients_match_finite_differences() {
    let mut r = rng(101);
    for case in 0..20 {
        let n = r.gen_range(1..=2);
        let c = r.gen_range(1..=2);
        let o = r.gen_range(1..=3);
        let kernel = (r.gen_range(1..=3), r.gen_range(1..=2), r.gen_range(1..=2));
        let stride = (r.gen_range(1..=2), r.gen_range(1..=2), r.gen_range(1..=2));
        let padding = (r.gen_range(0..=1), r.gen_range(0..=1), r.gen_range(0..=1));
        let t = r.gen_range(kernel.0..=4 + kernel.0);
        let h = r.gen_range(kernel.1..=3 + kernel.1);
        let w = r.gen_range(kernel.2..=3 + kernel.2);
        let input = random_tensor::<f64>([n, c, t, h, w], &mut r);
        let weight = random_tensor::<f64>([o, c, kernel.0, kernel.1, kernel.2], &mut r);
        let bias: Vec<f64> = (0..o).map(|_| r.gen_range(-0.5..0.5)).collect();
        let out = conv3d_forward(&input, &weight, Some(&bias), stride, padding).unwrap();
        let proj = random_tensor::<f64>(out.shape(), &mut r);

        let (gi, gw, gb) =
            conv3d_backward(&proj, &input, &weight, true, stride, padding).unwrap();

        let num_gi = numeric_grad(
            |x| {
                let xt = Tensor5::from_vec(input.shape(), x.to_vec()).unwrap();
                dot(
                    &conv3d_forward(&xt, &weight, Some(&bias), stride, padding).unwrap(),
                    &proj,
                )
            },
            input.data(),
            STEP,
        );
        assert!(
            rel_error(gi.data(), &num_gi) < TOL,
            "case {case}: grad_input off"
        );

        let num_gw = numeric_grad(
            |x| {
                let wt = Tensor5::from_vec(weight.shape(), x.to_vec()).unwrap();
                dot(
                    &conv3d_forward(&input, &wt, Some(&bias), stride, padding).unwrap(),
                    &proj,
                )
            },
            weight.data(),
            STEP,
        );
        assert!(
            rel_error(gw.data(), &num_gw) < TOL,
            "case {case}: grad_weight off"
        );

        let num_gb = numeric_grad(
            |x| {
                dot(
                    &conv3d_forward(&input, &weight, Some(x), stride, padding).unwrap(),
                    &proj,
                )
            },
            &bias,
            STEP,
        );
        assert!(
            rel_error(&gb.unwrap(), &num_gb) < TOL,
            "case {case}: grad_bias off"
        );
    }
}

#[test]
fn conv3d_zero_grad_out_gives_zero_grads() {
    let mut r = rng(7);
    let input = random_tensor::<f32>([1, 2, 4, 3, 3], &mut r);
    let weight = random_tensor::<f32>([2, 2, 3, 3, 3], &mut r);
    let zero = Tensor5::zeros([1, 2, 2, 1, 1]);
    let (gi, gw, gb) = conv3d_backward(&zero, &input, &weight, true, (1, 1, 1), (0, 0, 0)).unwrap();
    assert!(gi.data().iter().all(|&v| v == 0.0));
    assert!(gw.data().iter().all(|&v| v == 0.0));
    assert!(gb.unwrap().iter().all(|&v| v == 0.0));
}

#[test]
fn conv3d_scalar_case_weight_grad_equals_input() {
    let input = Tensor5::from_vec([1, 1, 1, 1, 1], vec![2.5f32]).unwrap();
    let weight = Tensor5::from_vec([1, 1, 1, 1, 1], vec![-0.7f32]).unwrap();
    let one = Tensor5::full([1, 1, 1, 1, 1], 1.0f32);
    let (_, gw, _) = conv3d_backward(&one, &input, &weight, false, (1, 1, 1), (0, 0, 0)).unwrap();
    assert!((gw.data()[0] - 2.5).abs() < 1e-7);
}

#[test]
fn batchnorm_gradients_match_finite_differences() {
    let mut r = rng(202);
    for case in 0..20 {
        let n = r.gen_range(2..=3);
        let c = r.gen_range(1..=3);
        let t = r.gen_range(2..=4);
        let h = r.gen_range(1..=3);
        let w = r.gen_range(1..=3);
        let input = random_tensor::<f64>([n, c, t, h, w], &mut r);
        let mut bn = BatchNorm3d::<f64>::new(c, 1e-5, 0.1);
        for g in bn.gamma.iter_mut() {
            *g = r.gen_range(0.5..1.5);
        }
        for b in bn.beta.iter_mut() {
            *b = r.gen_range(-0.5..0.5);
        }
        let (out, cache) = bn.forward(&input, BnMode::Train).unwrap();
        let cache = cache.unwrap();
        let proj = random_tensor::<f64>(out.shape(), &mut r);
        let (gi, gg, gb) = bn.backward(&proj, &cache).unwrap();

        let num_gi = numeric_grad(
            |x| {
                let xt = Tensor5::from_vec(input.shape(), x.to_vec()).unwrap();
                let mut bn2 = bn.clone();
                dot(&bn2.forward(&xt, BnMode::Train).unwrap().0, &proj)
            },
            input.data(),
            STEP,
        );
        assert!(
            rel_error(gi.data(), &num_gi) < TOL,
            "case {case}: bn grad_input off: {}",
            rel_error(gi.data(), &num_gi)
        );

        let num_gg = numeric_grad(
            |x| {
                let mut bn2 = bn.clone();
                bn2.gamma = x.to_vec();
                dot(&bn2.forward(&input, BnMode::Train).unwrap().0, &proj)
            },
            &bn.gamma,
            STEP,
        );
        assert!(rel_error(&gg, &num_gg) < TOL, "case {case}: grad_gamma off");

        let num_gb = numeric_grad(
            |x| {
                let mut bn2 = bn.clone();
                bn2.beta = x.to_vec();
                dot(&bn2.forward(&input, BnMode::Train).unwrap().0, &proj)
            },
            &bn.beta,
            STEP,
        );
        assert!(rel_error(&gb, &num_gb) < TOL, "case {case}: grad_beta off");
    }
}

#[test]
fn bn_identity_when_input_already_normalized() {
    // zero-mean unit-variance input, gain 1 shift 0: output ~ input
    let n = 64;
    let data: Vec<f32> = (0..n)
        .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
        .collect();
    let x = Tensor5::from_vec([4, 1, 4, 2, 2], data).unwrap();
    let mut bn = BatchNorm3d::<f32>::new(1, 1e-5, 0.1);
    let (y, _) = bn.forward(&x, BnMode::Train).unwrap();
    for (a, b) in y.data().iter().zip(x.data()) {
        assert!((a - b).abs() < 1e-3);
    }
}

#[test]
fn relu_gradient_matches_finite_differences() {
    let mut r = rng(303);
    for _ in 0..20 {
        let shape = [1, 2, r.gen_range(2..=4), 2, 2];
        // keep values away from the kink at 0
        let mut input = random_tensor::<f64>(shape, &mut r);
        for v in input.data_mut() {
            if v.abs() < 0.05 {
                *v += 0.1;
            }
        }
        let proj = random_tensor::<f64>(shape, &mut r);
        let gi = relu_backward(&proj, &input);
        let num = numeric_grad(
            |x| {
                let xt = Tensor5::from_vec(shape, x.to_vec()).unwrap();
                dot(&relu_forward(&xt), &proj)
            },
            input.data(),
            STEP,
        );
        assert!(rel_error(gi.data(), &num) < TOL);
    }
}

#[test]
fn maxpool_gradient_matches_finite_differences() {
    let mut r = rng(404);
    for case in 0..20 {
        let kernel = (r.gen_range(1..=3), r.gen_range(1..=2), r.gen_range(1..=2));
        let stride = (r.gen_range(1..=2), r.gen_range(1..=2), r.gen_range(1..=2));
        let t = r.gen_range(kernel.0..=kernel.0 + 3);
        let h = r.gen_range(kernel.1..=kernel.1 + 2);
        let w = r.gen_range(kernel.2..=kernel.2 + 2);
        let shape = [2, 2, t, h, w];
        // distinct values so the argmax is stable under the fd step
        let mut input = Tensor5::<f64>::zeros(shape);
        let mut vals: Vec<f64> = (0..input.len()).map(|i| i as f64 * 0.01).collect();
        for i in (1..vals.len()).rev() {
            vals.swap(i, r.gen_range(0..=i));
        }
        input.data_mut().copy_from_slice(&vals);
        let (out, argmax) = maxpool3d_forward(&input, kernel, stride, (0, 0, 0)).unwrap();
        let proj = random_tensor::<f64>(out.shape(), &mut r);
        let gi = maxpool3d_backward(&proj, &argmax, shape).unwrap();
        let num = numeric_grad(
            |x| {
                let xt = Tensor5::from_vec(shape, x.to_vec()).unwrap();
                dot(&maxpool3d_forward(&xt, kernel, stride, (0, 0, 0)).unwrap().0, &proj)
            },
            input.data(),
            STEP,
        );
        assert!(rel_error(gi.data(), &num) < TOL, "case {case}");
    }
}

#[test]
fn global_avg_pool_gradient_matches_finite_differences() {
    let mut r = rng(505);
    for _ in 0..20 {
        let shape = [2, 3, r.gen_range(1..=4), r.gen_range(1..=3), 2];
        let input = random_tensor::<f64>(shape, &mut r);
        let out = global_avg_pool(&input);
        let proj = random_tensor::<f64>(out.shape(), &mut r);
        let gi = global_avg_pool_backward(&proj, shape).unwrap();
        let num = numeric_grad(
            |x| {
                let xt = Tensor5::from_vec(shape, x.to_vec()).unwrap();
                dot(&global_avg_pool(&xt), &proj)
            },
            input.data(),
            STEP,
        );
        assert!(rel_error(gi.data(), &num) < TOL);
    }
}

#[test]
fn fc_gradients_match_finite_differences() {
    let mut r = rng(606);
    for _ in 0..20 {
        let n = r.gen_range(1..=4);
        let c = r.gen_range(1..=6);
        let k = r.gen_range(1..=4);
        let input = random_tensor::<f64>([n, c, 1, 1, 1], &mut r);
        let weight = random_tensor::<f64>([k, c, 1, 1, 1], &mut r);
        let bias: Vec<f64> = (0..k).map(|_| r.gen_range(-0.5..0.5)).collect();
        let out = fc_forward(&input, &weight, &bias).unwrap();
        let proj = random_tensor::<f64>(out.shape(), &mut r);
        let (gi, gw, gb) = fc_backward(&proj, &input, &weight).unwrap();

        let num_gi = numeric_grad(
            |x| {
                let xt = Tensor5::from_vec(input.shape(), x.to_vec()).unwrap();
                dot(&fc_forward(&xt, &weight, &bias).unwrap(), &proj)
            },
            input.data(),
            STEP,
        );
        assert!(rel_error(gi.data(), &num_gi) < TOL);
        let num_gw = numeric_grad(
            |x| {
                let wt = Tensor5::from_vec(weight.shape(), x.to_vec()).unwrap();
                dot(&fc_forward(&input, &wt, &bias).unwrap(), &proj)
            },
            weight.data(),
            STEP,
        );
        assert!(rel_error(gw.data(), &num_gw) < TOL);
        let num_gb = numeric_grad(
            |x| dot(&fc_forward(&input, &weight, x).unwrap(), &proj),
            &bias,
            STEP,
        );
        assert!(rel_error(&gb, &num_gb) < TOL);
    }
}

#[test]
fn softmax_ce_gradient_matches_finite_differences() {
    let mut r = rng(707);
    for _ in 0..20 {
        let n = r.gen_range(1..=5);
        let k = r.gen_range(2..=5);
        let logits = random_tensor::<f64>([n, k, 1, 1, 1], &mut r);
        let labels: Vec<usize> = (0..n).map(|_| r.gen_range(0..k)).collect();
        let (_, grad) = softmax_cross_entropy(&logits, &labels).unwrap();
        let num = numeric_grad(
            |x| {
                let xt = Tensor5::from_vec(logits.shape(), x.to_vec()).unwrap();
                softmax_cross_entropy(&xt, &labels).unwrap().0
            },
            logits.data(),
            STEP,
        );
        assert!(rel_error(grad.data(), &num) < 1e-6);
    }
}

#[test]
fn sigmoid_bce_gradient_matches_finite_differences() {
    let mut r = rng(808);
    for _ in 0..20 {
        let n = r.gen_range(1..=4);
        let k = r.gen_range(1..=6);
        let logits = random_tensor::<f64>([n, k, 1, 1, 1], &mut r);
        let targets = Tensor5::from_vec(
            logits.shape(),
            (0..n * k)
                .map(|_| if r.gen_bool(0.5) { 1.0 } else { 0.0 })
                .collect(),
        )
        .unwrap();
        let (_, grad) = sigmoid_bce(&logits, &targets).unwrap();
        let num = numeric_grad(
            |x| {
                let xt = Tensor5::from_vec(logits.shape(), x.to_vec()).unwrap();
                sigmoid_bce(&xt, &targets).unwrap().0
            },
            logits.data(),
            STEP,
        );
        assert!(rel_error(grad.data(), &num) < 1e-6);
    }
}

#[test]
fn f32_accumulation_mode_stays_within_loose_tolerance() {
    let mut r = rng(909);
    let input = random_tensor::<f32>([1, 2, 5, 4, 4], &mut r);
    let weight = random_tensor::<f32>([3, 2, 3, 3, 3], &mut r);
    let out = conv3d_forward(&input, &weight, None, (1, 1, 1), (1, 1, 1)).unwrap();
    let proj = random_tensor::<f32>(out.shape(), &mut r);
    let (gi, _, _) = conv3d_backward(&proj, &input, &weight, false, (1, 1, 1), (1, 1, 1)).unwrap();
    let proj64 = proj.cast::<f64>();
    let num = numeric_grad(
        |x| {
            let xt = Tensor5::from_vec(input.shape(), x.to_vec()).unwrap();
            dot(
                &conv3d_forward(&xt, &weight.cast::<f64>(), None, (1, 1, 1), (1, 1, 1)).unwrap(),
                &proj64,
            )
        },
        input.cast::<f64>().data(),
        STEP,
    );
    let analytic: Vec<f64> = gi.data().iter().map(|&v| v as f64).collect();
    assert!(rel_error(&analytic, &num) < 1e-3);
}
