//! Runnable network: pairs an [`ArchGraph`] with parameter state and
//! executes forward/backward passes over the DAG in topological order.

use crate::error::{HarnessError, Result};
use arch_graph::{ArchGraph, LayerKind};
use nn_core::checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, TensorEntry};
use nn_core::conv::{conv3d_backward, conv3d_forward};
use nn_core::linear::{fc_backward, fc_forward};
use nn_core::norm::{BatchNorm3d, BnCache, BnMode};
use nn_core::pool::{
    global_avg_pool, global_avg_pool_backward, maxpool3d_backward, maxpool3d_forward,
};
use nn_core::relu::{relu_backward, relu_forward};
use nn_core::init::{fill_normal, kaiming_std};
use nn_core::{Scalar, Tensor5};
use rand::Rng;
use std::path::Path;

/// Per-node parameter state.
#[derive(Debug, Clone)]
pub enum NodeState<T: Scalar> {
    Conv {
        /// (O, I, kt, kh, kw)
        weight: Tensor5<T>,
        bias: Option<Vec<T>>,
    },
    Bn(BatchNorm3d<T>),
    Fc {
        /// (out_features, in_features, 1, 1, 1)
        weight: Tensor5<T>,
        bias: Vec<T>,
    },
    Stateless,
}

/// Per-node gradient buffers, aligned with [`NodeState`].
#[derive(Debug, Clone)]
pub enum NodeGrad<T: Scalar> {
    Conv {
        weight: Tensor5<T>,
        bias: Option<Vec<T>>,
    },
    Bn {
        gamma: Vec<T>,
        beta: Vec<T>,
    },
    Fc {
        weight: Tensor5<T>,
        bias: Vec<T>,
    },
    Stateless,
}

pub struct Gradients<T: Scalar> {
    pub nodes: Vec<NodeGrad<T>>,
}

/// Saved activations from a forward pass; everything backward needs.
pub struct Forward<T: Scalar> {
    /// Output tensor of every node, indexed by topo position.
    pub outputs: Vec<Tensor5<T>>,
    aux: Vec<Aux<T>>,
}

enum Aux<T: Scalar> {
    None,
    Pool(Vec<usize>),
    Bn(Box<BnCache<T>>),
}

#[derive(Clone)]
pub struct Network<T: Scalar> {
    pub arch: ArchGraph,
    pub nodes: Vec<NodeState<T>>,
}

const BN_EPS: f64 = 1e-5;
const BN_MOMENTUM: f64 = 0.1;

impl<T: Scalar> Network<T> {
    /// Kaiming-normal conv/fc weights, zero biases, unit batch norm.
    pub fn init(arch: &ArchGraph, rng: &mut impl Rng) -> Result<Self> {
        arch.validate()?;
        let nodes = arch
            .nodes
            .iter()
            .map(|node| match &node.kind {
                LayerKind::Conv(c) => {
                    let (kt, kh, kw) = c.kernel;
                    let mut weight =
                        Tensor5::zeros([c.out_channels, c.in_channels, kt, kh, kw]);
                    let std = kaiming_std(c.out_channels * kt * kh * kw);
                    fill_normal(weight.data_mut(), std, rng);
                    NodeState::Conv {
                        weight,
                        bias: c.bias.then(|| vec![T::zero(); c.out_channels]),
                    }
                }
                LayerKind::BatchNorm { channels } => NodeState::Bn(BatchNorm3d::new(
                    *channels,
                    T::from_f64_s(BN_EPS),
                    T::from_f64_s(BN_MOMENTUM),
                )),
                LayerKind::Fc {
                    in_features,
                    out_features,
                } => {
                    let mut weight = Tensor5::zeros([*out_features, *in_features, 1, 1, 1]);
                    fill_normal(weight.data_mut(), (1.0 / *in_features as f64).sqrt(), rng);
                    NodeState::Fc {
                        weight,
                        bias: vec![T::zero(); *out_features],
                    }
                }
                _ => NodeState::Stateless,
            })
            .collect();
        Ok(Network {
            arch: arch.clone(),
            nodes,
        })
    }

    /// Full forward pass. Train mode updates batch-norm running stats and
    /// records the caches backward needs.
    pub fn forward(&mut self, input: &Tensor5<T>, mode: BnMode) -> Result<Forward<T>> {
        let n = self.arch.nodes.len();
        let mut outputs: Vec<Tensor5<T>> = Vec::with_capacity(n);
        let mut aux: Vec<Aux<T>> = Vec::with_capacity(n);
        for i in 0..n {
            let node = &self.arch.nodes[i];
            let x = |p: usize| -> &Tensor5<T> { &outputs[p] };
            let pred0 = node.preds.first().copied();
            let inp = match pred0 {
                Some(p) => x(p),
                None => input,
            };
            let (out, a) = match (&node.kind, &mut self.nodes[i]) {
                (LayerKind::Conv(c), NodeState::Conv { weight, bias }) => (
                    conv3d_forward(inp, weight, bias.as_deref(), c.stride, c.padding)?,
                    Aux::None,
                ),
                (LayerKind::MaxPool(p), _) => {
                    let (out, argmax) = maxpool3d_forward(inp, p.kernel, p.stride, p.padding)?;
                    (out, Aux::Pool(argmax))
                }
                (LayerKind::BatchNorm { .. }, NodeState::Bn(bn)) => {
                    let (out, cache) = bn.forward(inp, mode)?;
                    (out, cache.map_or(Aux::None, |c| Aux::Bn(Box::new(c))))
                }
                (LayerKind::Relu, _) => (relu_forward(inp), Aux::None),
                (LayerKind::GlobalPool, _) => (global_avg_pool(inp), Aux::None),
                (LayerKind::Fc { .. }, NodeState::Fc { weight, bias }) => {
                    (fc_forward(inp, weight, bias)?, Aux::None)
                }
                (LayerKind::ResidualAdd, _) => {
                    let a = x(node.preds[0]);
                    let b = x(node.preds[1]);
                    if a.shape() != b.shape() {
                        return Err(HarnessError::Numerical(format!(
                            "residual shapes {:?} vs {:?} at node '{}'",
                            a.shape(),
                            b.shape(),
                            node.name
                        )));
                    }
                    let data = a.data().iter().zip(b.data()).map(|(&u, &v)| u + v).collect();
                    (
                        Tensor5::from_vec(a.shape(), data).expect("same shape"),
                        Aux::None,
                    )
                }
                _ => unreachable!("node kind/state mismatch"),
            };
            outputs.push(out);
            aux.push(a);
        }
        Ok(Forward { outputs, aux })
    }

    /// Logits of the sink node in eval mode.
    pub fn predict(&mut self, input: &Tensor5<T>) -> Result<Tensor5<T>> {
        let fwd = self.forward(input, BnMode::Eval)?;
        Ok(fwd.outputs.last().expect("non-empty graph").clone())
    }

    /// Backward pass from the loss gradient at the sink. Must follow a
    /// train-mode forward (batch norm needs its cache).
    pub fn backward(
        &self,
        input: &Tensor5<T>,
        fwd: &Forward<T>,
        grad_sink: Tensor5<T>,
    ) -> Result<Gradients<T>> {
        let n = self.arch.nodes.len();
        let mut out_grads: Vec<Option<Tensor5<T>>> = vec![None; n];
        *out_grads.last_mut().unwrap() = Some(grad_sink);
        let mut node_grads: Vec<NodeGrad<T>> = (0..n).map(|_| NodeGrad::Stateless).collect();

        let accumulate = |slot: &mut Option<Tensor5<T>>, g: Tensor5<T>| {
            match slot {
                Some(acc) => {
                    for (a, b) in acc.data_mut().iter_mut().zip(g.data()) {
                        *a += *b;
                    }
                }
                None => *slot = Some(g),
            };
        };

        for i in (0..n).rev() {
            let node = &self.arch.nodes[i];
            let grad = out_grads[i].take().ok_or_else(|| {
                HarnessError::Numerical(format!("no gradient reached node '{}'", node.name))
            })?;
            let inp = match node.preds.first() {
                Some(&p) => &fwd.outputs[p],
                None => input,
            };
            match (&node.kind, &self.nodes[i], &fwd.aux[i]) {
                (LayerKind::Conv(c), NodeState::Conv { weight, bias }, _) => {
                    let (gi, gw, gb) =
                        conv3d_backward(&grad, inp, weight, bias.is_some(), c.stride, c.padding)?;
                    node_grads[i] = NodeGrad::Conv {
                        weight: gw,
                        bias: gb,
                    };
                    if let Some(&p) = node.preds.first() {
                        accumulate(&mut out_grads[p], gi);
                    }
                }
                (LayerKind::MaxPool(_), _, Aux::Pool(argmax)) => {
                    let gi = maxpool3d_backward(&grad, argmax, inp.shape())?;
                    if let Some(&p) = node.preds.first() {
                        accumulate(&mut out_grads[p], gi);
                    }
                }
                (LayerKind::BatchNorm { .. }, NodeState::Bn(bn), Aux::Bn(cache)) => {
                    let (gi, gg, gb) = bn.backward(&grad, cache)?;
                    node_grads[i] = NodeGrad::Bn {
                        gamma: gg,
                        beta: gb,
                    };
                    if let Some(&p) = node.preds.first() {
                        accumulate(&mut out_grads[p], gi);
                    }
                }
                (LayerKind::BatchNorm { .. }, _, Aux::None) => {
                    return Err(HarnessError::Numerical(format!(
                        "backward through eval-mode batch norm '{}'",
                        node.name
                    )));
                }
                (LayerKind::Relu, _, _) => {
                    if let Some(&p) = node.preds.first() {
                        accumulate(&mut out_grads[p], relu_backward(&grad, inp));
                    }
                }
                (LayerKind::GlobalPool, _, _) => {
                    let gi = global_avg_pool_backward(&grad, inp.shape())?;
                    if let Some(&p) = node.preds.first() {
                        accumulate(&mut out_grads[p], gi);
                    }
                }
                (LayerKind::Fc { .. }, NodeState::Fc { weight, .. }, _) => {
                    let (gi, gw, gb) = fc_backward(&grad, inp, weight)?;
                    node_grads[i] = NodeGrad::Fc {
                        weight: gw,
                        bias: gb,
                    };
                    if let Some(&p) = node.preds.first() {
                        accumulate(&mut out_grads[p], gi);
                    }
                }
                (LayerKind::ResidualAdd, _, _) => {
                    accumulate(&mut out_grads[node.preds[0]], grad.clone());
                    accumulate(&mut out_grads[node.preds[1]], grad);
                }
                _ => unreachable!("node kind/state mismatch"),
            }
        }
        Ok(Gradients { nodes: node_grads })
    }

    /// (parameter, gradient) slice pairs in a stable order, for the
    /// optimizer. Batch-norm running stats are not included.
    pub fn param_grad_pairs<'a>(
        &'a mut self,
        grads: &'a Gradients<T>,
    ) -> Vec<(&'a mut [T], &'a [T])> {
        let mut pairs: Vec<(&mut [T], &[T])> = Vec::new();
        for (state, grad) in self.nodes.iter_mut().zip(&grads.nodes) {
            match (state, grad) {
                (
                    NodeState::Conv { weight, bias },
                    NodeGrad::Conv {
                        weight: gw,
                        bias: gb,
                    },
                ) => {
                    pairs.push((weight.data_mut(), gw.data()));
                    if let (Some(b), Some(gb)) = (bias.as_mut(), gb.as_ref()) {
                        pairs.push((b.as_mut_slice(), gb.as_slice()));
                    }
                }
                (NodeState::Bn(bn), NodeGrad::Bn { gamma, beta }) => {
                    pairs.push((bn.gamma.as_mut_slice(), gamma.as_slice()));
                    pairs.push((bn.beta.as_mut_slice(), beta.as_slice()));
                }
                (
                    NodeState::Fc { weight, bias },
                    NodeGrad::Fc {
                        weight: gw,
                        bias: gb,
                    },
                ) => {
                    pairs.push((weight.data_mut(), gw.data()));
                    pairs.push((bias.as_mut_slice(), gb.as_slice()));
                }
                (_, NodeGrad::Stateless) => {}
                _ => unreachable!("state/grad misalignment"),
            }
        }
        pairs
    }

    /// Sets every conv/fc weight to `value` and biases/batch-norm to
    /// identity; used by impulse-response oracles.
    pub fn fill_constant_weights(&mut self, value: T) {
        for state in &mut self.nodes {
            match state {
                NodeState::Conv { weight, bias } => {
                    weight.data_mut().fill(value);
                    if let Some(b) = bias {
                        b.fill(T::zero());
                    }
                }
                NodeState::Fc { weight, bias } => {
                    weight.data_mut().fill(value);
                    bias.fill(T::zero());
                }
                NodeState::Bn(bn) => {
                    bn.gamma.fill(T::one());
                    bn.beta.fill(T::zero());
                    bn.running_mean.fill(T::zero());
                    bn.running_var.fill(T::one());
                }
                NodeState::Stateless => {}
            }
        }
    }

    /// Serializes all parameters (learned and running stats) to the
    /// checkpoint format, embedding the architecture in the header.
    pub fn save(&self, path: &Path) -> Result<()> {
        let header = serde_json::json!({ "arch": self.arch });
        let mut tensors = Vec::new();
        let as_f32 = |v: &[T]| -> Vec<f32> { v.iter().map(|&x| x.to_f64_s() as f32).collect() };
        for (node, state) in self.arch.nodes.iter().zip(&self.nodes) {
            let mut push = |suffix: &str, dims: Vec<u64>, data: Vec<f32>| {
                tensors.push(TensorEntry {
                    name: format!("{}.{suffix}", node.name),
                    dims,
                    data,
                });
            };
            match state {
                NodeState::Conv { weight, bias } => {
                    push(
                        "weight",
                        weight.shape().iter().map(|&d| d as u64).collect(),
                        as_f32(weight.data()),
                    );
                    if let Some(b) = bias {
                        push("bias", vec![b.len() as u64], as_f32(b));
                    }
                }
                NodeState::Bn(bn) => {
                    let c = bn.channels as u64;
                    push("gamma", vec![c], as_f32(&bn.gamma));
                    push("beta", vec![c], as_f32(&bn.beta));
                    push("running_mean", vec![c], as_f32(&bn.running_mean));
                    push("running_var", vec![c], as_f32(&bn.running_var));
                }
                NodeState::Fc { weight, bias } => {
                    push(
                        "weight",
                        weight.shape().iter().map(|&d| d as u64).collect(),
                        as_f32(weight.data()),
                    );
                    push("bias", vec![bias.len() as u64], as_f32(bias));
                }
                NodeState::Stateless => {}
            }
        }
        write_checkpoint(path, &Checkpoint { header, tensors })?;
        Ok(())
    }

    /// Rebuilds a network from a checkpoint written by [`Network::save`].
    pub fn load(path: &Path) -> Result<Self> {
        let ckpt = read_checkpoint(path)?;
        let arch: ArchGraph = serde_json::from_value(
            ckpt.header
                .get("arch")
                .cloned()
                .ok_or_else(|| HarnessError::Data("checkpoint header lacks 'arch'".into()))?,
        )
        .map_err(|e| HarnessError::Data(format!("checkpoint arch invalid: {e}")))?;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let mut net = Network::init(&arch, &mut rng)?;
        let from_f32 = |v: &[f32]| -> Vec<T> {
            v.iter().map(|&x| T::from_f64_s(x as f64)).collect()
        };
        let find = |name: &str| -> Result<&TensorEntry> {
            ckpt.tensors
                .iter()
                .find(|t| t.name == name)
                .ok_or_else(|| HarnessError::Data(format!("checkpoint lacks tensor '{name}'")))
        };
        for (node, state) in arch.nodes.iter().zip(net.nodes.iter_mut()) {
            let load_into = |dst: &mut Vec<T>, entry: &TensorEntry| -> Result<()> {
                if entry.data.len() != dst.len() {
                    return Err(HarnessError::Data(format!(
                        "tensor '{}' has {} values, expected {}",
                        entry.name,
                        entry.data.len(),
                        dst.len()
                    )));
                }
                *dst = from_f32(&entry.data);
                Ok(())
            };
            match state {
                NodeState::Conv { weight, bias } => {
                    let e = find(&format!("{}.weight", node.name))?;
                    if e.data.len() != weight.len() {
                        return Err(HarnessError::Data(format!(
                            "tensor '{}' size mismatch",
                            e.name
                        )));
                    }
                    *weight = Tensor5::from_vec(weight.shape(), from_f32(&e.data))
                        .map_err(HarnessError::Nn)?;
                    if let Some(b) = bias {
                        let mut v = b.clone();
                        load_into(&mut v, find(&format!("{}.bias", node.name))?)?;
                        *b = v;
                    }
                }
                NodeState::Bn(bn) => {
                    for (field, dst) in [
                        ("gamma", &mut bn.gamma),
                        ("beta", &mut bn.beta),
                        ("running_mean", &mut bn.running_mean),
                        ("running_var", &mut bn.running_var),
                    ] {
                        let e = find(&format!("{}.{field}", node.name))?;
                        let mut v = dst.clone();
                        load_into(&mut v, e)?;
                        *dst = v;
                    }
                }
                NodeState::Fc { weight, bias } => {
                    let e = find(&format!("{}.weight", node.name))?;
                    if e.data.len() != weight.len() {
                        return Err(HarnessError::Data(format!(
                            "tensor '{}' size mismatch",
                            e.name
                        )));
                    }
                    *weight = Tensor5::from_vec(weight.shape(), from_f32(&e.data))
                        .map_err(HarnessError::Nn)?;
                    let mut v = bias.clone();
                    load_into(&mut v, find(&format!("{}.bias", node.name))?)?;
                    *bias = v;
                }
                NodeState::Stateless => {}
            }
        }
        Ok(net)
    }
}

use rand_chacha::rand_core::SeedableRng;
