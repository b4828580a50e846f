//! Static analysis over an [`ArchGraph`]: shape inference and the
//! temporal receptive-field calculus.
//!
//! Each node carries three temporal quantities besides its extents:
//! the receptive field `rf_t` (input frames one output step can see),
//! the jump `jump_t` (input-frame distance between adjacent output
//! steps, the product of all strides so far) and the offset `offset_t`
//! (how far the first output step's window starts *before* frame 0,
//! accumulated from padding). For a layer with temporal kernel `k`,
//! stride `s` and padding `p` applied to a node with `(r, j, o)`:
//!
//! ```text
//! r' = r + (k - 1) * j        j' = j * s        o' = o + p * j
//! t' = floor((t + 2p - k) / s) + 1
//! ```
//!
//! Output step `i` of the deepest conv then covers input frames
//! `[i * j - o, i * j - o + r - 1]`, clipped to the actual clip.

use crate::error::{ArchError, Result};
use crate::graph::{ArchGraph, LayerKind};
use serde::{Deserialize, Serialize};

/// Per-node output geometry after a forward pass on a given input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeGeometry {
    pub channels: usize,
    pub t: usize,
    pub h: usize,
    pub w: usize,
    /// Temporal receptive field in input frames.
    pub rf_t: usize,
    /// Input-frame stride between adjacent temporal output positions.
    pub jump_t: usize,
    /// Frames the first window starts before input frame 0.
    pub offset_t: usize,
}

/// Receptive-field summary at the deepest convolution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RfReport {
    pub node_index: usize,
    pub node_name: String,
    pub rf_t: usize,
    pub jump_t: usize,
    pub offset_t: usize,
    /// Temporal output length at the deepest conv.
    pub out_t: usize,
}

/// One temporal output position's clipped input coverage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub position: usize,
    /// First input frame covered (after clipping to the clip).
    pub start: usize,
    /// Last input frame covered, inclusive.
    pub end: usize,
}

/// Propagates geometry through every node for an input of shape
/// `(in_channels, t, h, w)`. Returns one [`NodeGeometry`] per node.
pub fn propagate(arch: &ArchGraph, t: usize, h: usize, w: usize) -> Result<Vec<NodeGeometry>> {
    arch.validate()?;
    if t == 0 || h == 0 || w == 0 {
        return Err(ArchError::Invalid(format!(
            "input extents ({t}, {h}, {w}) must all be >= 1"
        )));
    }
    let source_in = match &arch.nodes[0].kind {
        LayerKind::Conv(c) => c.in_channels,
        _ => {
            return Err(ArchError::Node {
                index: 0,
                name: arch.nodes[0].name.clone(),
                message: "source node must be a convolution".into(),
            })
        }
    };
    let input = NodeGeometry {
        channels: source_in,
        t,
        h,
        w,
        rf_t: 1,
        jump_t: 1,
        offset_t: 0,
    };

    let mut out: Vec<NodeGeometry> = Vec::with_capacity(arch.nodes.len());
    for (i, node) in arch.nodes.iter().enumerate() {
        let err = |message: String| ArchError::Node {
            index: i,
            name: node.name.clone(),
            message,
        };
        let g = if i == 0 {
            apply_kind(arch, i, input)?
        } else if let LayerKind::ResidualAdd = node.kind {
            let a = out[node.preds[0]];
            let b = out[node.preds[1]];
            if (a.channels, a.t, a.h, a.w) != (b.channels, b.t, b.h, b.w) {
                return Err(err(format!(
                    "residual branches disagree on shape: ({}, {}, {}, {}) vs ({}, {}, {}, {})",
                    a.channels, a.t, a.h, a.w, b.channels, b.t, b.h, b.w
                )));
            }
            if a.jump_t != b.jump_t {
                return Err(err(format!(
                    "residual branches disagree on temporal jump: {} vs {}",
                    a.jump_t, b.jump_t
                )));
            }
            NodeGeometry {
                rf_t: a.rf_t.max(b.rf_t),
                offset_t: a.offset_t.max(b.offset_t),
                ..a
            }
        } else {
            apply_kind(arch, i, out[node.preds[0]])?
        };
        out.push(g);
    }
    Ok(out)
}

fn apply_kind(arch: &ArchGraph, i: usize, g: NodeGeometry) -> Result<NodeGeometry> {
    let node = &arch.nodes[i];
    let err = |message: String| ArchError::Node {
        index: i,
        name: node.name.clone(),
        message,
    };
    let windowed = |g: NodeGeometry,
                    out_channels: usize,
                    kernel: (usize, usize, usize),
                    stride: (usize, usize, usize),
                    padding: (usize, usize, usize)|
     -> Result<NodeGeometry> {
        let ext = |len: usize, k: usize, s: usize, p: usize, axis: &str| -> Result<usize> {
            let padded = len + 2 * p;
            if padded < k {
                return Err(err(format!(
                    "{axis} extent {len} (+2*{p} padding) is smaller than kernel {k}"
                )));
            }
            Ok((padded - k) / s + 1)
        };
        Ok(NodeGeometry {
            channels: out_channels,
            t: ext(g.t, kernel.0, stride.0, padding.0, "temporal")?,
            h: ext(g.h, kernel.1, stride.1, padding.1, "height")?,
            w: ext(g.w, kernel.2, stride.2, padding.2, "width")?,
            rf_t: g.rf_t + (kernel.0 - 1) * g.jump_t,
            jump_t: g.jump_t * stride.0,
            offset_t: g.offset_t + padding.0 * g.jump_t,
        })
    };
    match &node.kind {
        LayerKind::Conv(c) => {
            if c.in_channels != g.channels {
                return Err(err(format!(
                    "conv expects {} input channels, predecessor provides {}",
                    c.in_channels, g.channels
                )));
            }
            windowed(g, c.out_channels, c.kernel, c.stride, c.padding)
        }
        LayerKind::MaxPool(p) => windowed(g, g.channels, p.kernel, p.stride, p.padding),
        LayerKind::BatchNorm { channels } => {
            if *channels != g.channels {
                return Err(err(format!(
                    "batch norm over {} channels, predecessor provides {}",
                    channels, g.channels
                )));
            }
            Ok(g)
        }
        LayerKind::Relu | LayerKind::ResidualAdd => Ok(g),
        LayerKind::GlobalPool => Ok(NodeGeometry {
            t: 1,
            h: 1,
            w: 1,
            // the pooled value sees every frame
            rf_t: g.rf_t + (g.t - 1) * g.jump_t,
            jump_t: g.jump_t,
            offset_t: g.offset_t,
            ..g
        }),
        LayerKind::Fc {
            in_features,
            out_features,
        } => {
            if (g.t, g.h, g.w) != (1, 1, 1) {
                return Err(err(format!(
                    "fc expects pooled (1, 1, 1) input, got ({}, {}, {})",
                    g.t, g.h, g.w
                )));
            }
            if *in_features != g.channels {
                return Err(err(format!(
                    "fc expects {} input features, predecessor provides {}",
                    in_features, g.channels
                )));
            }
            Ok(NodeGeometry {
                channels: *out_features,
                ..g
            })
        }
    }
}

/// Shape inference: `(channels, t, h, w)` per node.
pub fn shape_inference(
    arch: &ArchGraph,
    t: usize,
    h: usize,
    w: usize,
) -> Result<Vec<(usize, usize, usize, usize)>> {
    Ok(propagate(arch, t, h, w)?
        .iter()
        .map(|g| (g.channels, g.t, g.h, g.w))
        .collect())
}

/// Receptive-field summary at the deepest convolution of the graph.
pub fn rf_calculus(arch: &ArchGraph, t: usize, h: usize, w: usize) -> Result<RfReport> {
    let geoms = propagate(arch, t, h, w)?;
    let idx = arch
        .last_conv()
        .ok_or_else(|| ArchError::Invalid("graph has no convolution node".into()))?;
    let g = geoms[idx];
    Ok(RfReport {
        node_index: idx,
        node_name: arch.nodes[idx].name.clone(),
        rf_t: g.rf_t,
        jump_t: g.jump_t,
        offset_t: g.offset_t,
        out_t: g.t,
    })
}

/// Clipped input coverage of every temporal position at the deepest conv.
pub fn rf_trace(arch: &ArchGraph, t: usize, h: usize, w: usize) -> Result<Vec<Window>> {
    let report = rf_calculus(arch, t, h, w)?;
    Ok((0..report.out_t)
        .map(|i| {
            let lo = (i * report.jump_t) as i64 - report.offset_t as i64;
            let hi = lo + report.rf_t as i64 - 1;
            Window {
                position: i,
                start: lo.max(0) as usize,
                end: hi.min(t as i64 - 1) as usize,
            }
        })
        .collect())
}
