//! Property test: static shape inference agrees with the shapes actually
//! produced by executing the network, on random valid architectures.

use arch_graph::{shape_inference, ArchGraph, ConvNode, LayerKind, LayerNode, PoolNode};
use harness::Network;
use nn_core::norm::BnMode;
use nn_core::Tensor5;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Builds a random valid architecture while tracking extents so every
/// layer stays geometrically feasible.
fn random_arch(rng: &mut ChaCha8Rng, t0: usize, h0: usize, w0: usize) -> ArchGraph {
    let mut nodes: Vec<LayerNode> = Vec::new();
    let (mut t, mut h, mut w) = (t0, h0, w0);
    let mut channels = 1usize;

    let push = |nodes: &mut Vec<LayerNode>, kind: LayerKind, preds: Vec<usize>| -> usize {
        nodes.push(LayerNode {
            name: format!("n{}", nodes.len()),
            kind,
            preds,
        });
        nodes.len() - 1
    };

    // windowed-layer geometry helper: feasible (k, s, p) per axis
    fn pick(rng: &mut ChaCha8Rng, len: usize, allow_pad: bool) -> (usize, usize, usize) {
        let k = rng.gen_range(1..=3.min(len));
        let p = if allow_pad && k > 1 && rng.gen_bool(0.5) { 1 } else { 0 };
        let s = rng.gen_range(1..=2);
        (k, s, p)
    }
    let out_len = |len: usize, (k, s, p): (usize, usize, usize)| (len + 2 * p - k) / s + 1;

    // stem conv so node 0 is a convolution
    let cout = rng.gen_range(2..=4);
    let kt = pick(rng, t, true);
    let kh = pick(rng, h, true);
    let kw = pick(rng, w, true);
    let mut last = push(
        &mut nodes,
        LayerKind::Conv(ConvNode {
            in_channels: channels,
            out_channels: cout,
            kernel: (kt.0, kh.0, kw.0),
            stride: (kt.1, kh.1, kw.1),
            padding: (kt.2, kh.2, kw.2),
            bias: rng.gen_bool(0.5),
        }),
        vec![],
    );
    channels = cout;
    t = out_len(t, kt);
    h = out_len(h, kh);
    w = out_len(w, kw);

    for _ in 0..rng.gen_range(2..6) {
        match rng.gen_range(0..5) {
            0 => {
                let cout = rng.gen_range(2..=5);
                let kt = pick(rng, t, true);
                let kh = pick(rng, h, true);
                let kw = pick(rng, w, true);
                last = push(
                    &mut nodes,
                    LayerKind::Conv(ConvNode {
                        in_channels: channels,
                        out_channels: cout,
                        kernel: (kt.0, kh.0, kw.0),
                        stride: (kt.1, kh.1, kw.1),
                        padding: (kt.2, kh.2, kw.2),
                        bias: rng.gen_bool(0.5),
                    }),
                    vec![last],
                );
                channels = cout;
                t = out_len(t, kt);
                h = out_len(h, kh);
                w = out_len(w, kw);
            }
            1 => {
                // pool padding must stay below the kernel
                let kt = pick(rng, t, false);
                let kh = pick(rng, h, false);
                let kw = pick(rng, w, false);
                last = push(
                    &mut nodes,
                    LayerKind::MaxPool(PoolNode {
                        kernel: (kt.0, kh.0, kw.0),
                        stride: (kt.1, kh.1, kw.1),
                        padding: (0, 0, 0),
                    }),
                    vec![last],
                );
                t = out_len(t, kt);
                h = out_len(h, kh);
                w = out_len(w, kw);
            }
            2 => {
                last = push(&mut nodes, LayerKind::BatchNorm { channels }, vec![last]);
            }
            3 => {
                last = push(&mut nodes, LayerKind::Relu, vec![last]);
            }
            _ => {
                // two 1x1x1 branches merged by a residual add
                let cout = rng.gen_range(2..=4);
                let branch = |nodes: &mut Vec<LayerNode>, cin: usize, pred: usize| {
                    nodes.push(LayerNode {
                        name: format!("n{}", nodes.len()),
                        kind: LayerKind::Conv(ConvNode {
                            in_channels: cin,
                            out_channels: cout,
                            kernel: (1, 1, 1),
                            stride: (1, 1, 1),
                            padding: (0, 0, 0),
                            bias: false,
                        }),
                        preds: vec![pred],
                    });
                    nodes.len() - 1
                };
                let a = branch(&mut nodes, channels, last);
                let b = branch(&mut nodes, channels, last);
                last = push(&mut nodes, LayerKind::ResidualAdd, vec![a, b]);
                channels = cout;
            }
        }
    }

    last = push(&mut nodes, LayerKind::GlobalPool, vec![last]);
    push(
        &mut nodes,
        LayerKind::Fc {
            in_features: channels,
            out_features: rng.gen_range(2..=4),
        },
        vec![last],
    );
    ArchGraph { nodes }
}

#[test]
fn shape_inference_matches_execution_on_200_random_archs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..200 {
        let (t, h, w) = (
            rng.gen_range(4..10),
            rng.gen_range(4..10),
            rng.gen_range(4..10),
        );
        let arch = random_arch(&mut rng, t, h, w);
        arch.validate().unwrap_or_else(|e| panic!("case {case}: {e}"));
        let predicted = shape_inference(&arch, t, h, w).unwrap();

        let mut net: Network<f32> = Network::init(&arch, &mut rng).unwrap();
        let n = 2; // batch of 2 keeps train-mode batch norm happy
        let input = Tensor5::zeros([n, 1, t, h, w]);
        let fwd = net.forward(&input, BnMode::Train).unwrap();
        for (i, out) in fwd.outputs.iter().enumerate() {
            let (bn, c, ot, oh, ow) = out.dims();
            assert_eq!(bn, n, "case {case} node {i}");
            assert_eq!(
                (c, ot, oh, ow),
                predicted[i],
                "case {case} node {i} ({})",
                arch.nodes[i].name
            );
        }
    }
}
