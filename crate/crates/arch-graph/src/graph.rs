//! Layer descriptors and the architecture DAG.

use crate::error::{ArchError, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvNode {
    pub in_channels: usize,
    pub out_channels: usize,
    /// (kt, kh, kw)
    pub kernel: (usize, usize, usize),
    pub stride: (usize, usize, usize),
    pub padding: (usize, usize, usize),
    pub bias: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolNode {
    pub kernel: (usize, usize, usize),
    pub stride: (usize, usize, usize),
    pub padding: (usize, usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerKind {
    Conv(ConvNode),
    MaxPool(PoolNode),
    BatchNorm { channels: usize },
    Relu,
    /// Global average pool over (T, H, W).
    GlobalPool,
    Fc { in_features: usize, out_features: usize },
    /// Elementwise sum of exactly two predecessors.
    ResidualAdd,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerNode {
    pub name: String,
    #[serde(flatten)]
    pub kind: LayerKind,
    /// Indices of predecessor nodes; empty only for the source node.
    pub preds: Vec<usize>,
}

/// DAG of layer descriptors in topological order (every predecessor
/// index is smaller than the node's own index). Node 0 is the single
/// source; the last node is the single sink.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchGraph {
    pub nodes: Vec<LayerNode>,
}

impl ArchGraph {
    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(ArchError::Invalid("graph has no nodes".into()));
        }
        let n = self.nodes.len();
        let mut has_successor = vec![false; n];
        for (i, node) in self.nodes.iter().enumerate() {
            let err = |message: String| ArchError::Node {
                index: i,
                name: node.name.clone(),
                message,
            };
            for &p in &node.preds {
                if p >= i {
                    return Err(err(format!("predecessor {p} is not earlier in topo order")));
                }
                has_successor[p] = true;
            }
            match &node.kind {
                LayerKind::ResidualAdd => {
                    if node.preds.len() != 2 {
                        return Err(err(format!(
                            "residual_add needs exactly 2 predecessors, has {}",
                            node.preds.len()
                        )));
                    }
                }
                _ => {
                    if i == 0 && !node.preds.is_empty() {
                        return Err(err("source node must have no predecessors".into()));
                    }
                    if i > 0 && node.preds.len() != 1 {
                        return Err(err(format!(
                            "expected exactly 1 predecessor, has {}",
                            node.preds.len()
                        )));
                    }
                }
            }
            match &node.kind {
                LayerKind::Conv(c) => {
                    check_geometry(i, &node.name, c.kernel, c.stride, c.padding)?;
                    if c.in_channels == 0 || c.out_channels == 0 {
                        return Err(err("conv channels must be >= 1".into()));
                    }
                }
                LayerKind::MaxPool(p) => {
                    check_geometry(i, &node.name, p.kernel, p.stride, p.padding)?
                }
                LayerKind::BatchNorm { channels } => {
                    if *channels == 0 {
                        return Err(err("batch norm channels must be >= 1".into()));
                    }
                }
                LayerKind::Fc {
                    in_features,
                    out_features,
                } => {
                    if *in_features == 0 || *out_features == 0 {
                        return Err(err("fc features must be >= 1".into()));
                    }
                }
                _ => {}
            }
        }
        // exactly one sink: only the last node may lack successors
        for (i, reached) in has_successor.iter().enumerate().take(n - 1) {
            if !reached {
                return Err(ArchError::Node {
                    index: i,
                    name: self.nodes[i].name.clone(),
                    message: "dead end: sink is not reachable from this node".into(),
                });
            }
        }
        // all nodes reachable from the source: with topo-ordered preds and
        // exactly one pred-free node this reduces to "only node 0 is a source"
        for (i, node) in self.nodes.iter().enumerate().skip(1) {
            if node.preds.is_empty() {
                return Err(ArchError::Node {
                    index: i,
                    name: node.name.clone(),
                    message: "unreachable from the input source".into(),
                });
            }
        }
        Ok(())
    }

    /// Topo index of the deepest convolution node, the reference point of
    /// the temporal-RF definition (pooling/classifier head excluded).
    pub fn last_conv(&self) -> Option<usize> {
        self.nodes
            .iter()
            .rposition(|n| matches!(n.kind, LayerKind::Conv(_)))
    }
}

fn check_geometry(
    index: usize,
    name: &str,
    kernel: (usize, usize, usize),
    stride: (usize, usize, usize),
    padding: (usize, usize, usize),
) -> Result<()> {
    let _ = padding;
    let ks = [kernel.0, kernel.1, kernel.2, stride.0, stride.1, stride.2];
    if ks.iter().any(|&v| v == 0) {
        return Err(ArchError::Node {
            index,
            name: name.to_string(),
            message: format!("kernel {kernel:?} and stride {stride:?} must be >= 1 everywhere"),
        });
    }
    Ok(())
}
