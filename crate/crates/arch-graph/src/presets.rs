//! Model-zoo presets: 3D ResNet-50 and the Video BagNet family, plus
//! parameter counting.
//!
//! Both families share the bottleneck layout (1x1 reduce, kx3x3 core,
//! 1x1 expand, projection shortcut at stage entries) with stages of
//! 3/4/6/3 blocks over base widths 64/128/256/512 (x4 expansion).
//!
//! BagNet variants shrink temporal kernels, pool only spatially after
//! conv1, drop all temporal padding, and downsample time only in stages
//! whose first block still carries a temporal-3 kernel. Because their
//! temporal-3 convolutions are unpadded, the first block of such a stage
//! shrinks the clip by two frames; the shortcut branch mirrors that with
//! a parameter-free max pool of kernel (3,1,1) so both merge inputs line
//! up frame for frame.

use crate::error::{ArchError, Result};
use crate::graph::{ArchGraph, ConvNode, LayerKind, LayerNode, PoolNode};
use serde::{Deserialize, Serialize};

/// Where a stage's stride lands inside its first bottleneck block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DownsampleAt {
    /// On the leading 1x1 convolution.
    BottleneckEntry,
    /// On the kx3x3 core convolution.
    MidConv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Resnet50_3d,
    /// Temporal receptive field target: 1, 9, 17 or 33.
    VideoBagnet(u32),
}

impl Preset {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "resnet50-3d" | "resnet50_3d" => Ok(Preset::Resnet50_3d),
            "video-bagnet-1" | "video_bagnet_1" => Ok(Preset::VideoBagnet(1)),
            "video-bagnet-9" | "video_bagnet_9" => Ok(Preset::VideoBagnet(9)),
            "video-bagnet-17" | "video_bagnet_17" => Ok(Preset::VideoBagnet(17)),
            "video-bagnet-33" | "video_bagnet_33" => Ok(Preset::VideoBagnet(33)),
            other => Err(ArchError::Invalid(format!(
                "unknown preset '{other}' (expected resnet50-3d or video-bagnet-1/9/17/33)"
            ))),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Preset::Resnet50_3d => "resnet50-3d".into(),
            Preset::VideoBagnet(v) => format!("video-bagnet-{v}"),
        }
    }

    /// Paper widening factor keeping parameter counts comparable.
    pub fn default_width(&self) -> f64 {
        match self {
            Preset::Resnet50_3d => 1.0,
            Preset::VideoBagnet(1) | Preset::VideoBagnet(9) => 1.40,
            Preset::VideoBagnet(17) => 1.35,
            Preset::VideoBagnet(33) => 1.25,
            Preset::VideoBagnet(_) => 1.0,
        }
    }

    pub fn default_downsample_at(&self) -> DownsampleAt {
        match self {
            Preset::Resnet50_3d => DownsampleAt::MidConv,
            Preset::VideoBagnet(_) => DownsampleAt::BottleneckEntry,
        }
    }

    pub fn build(&self, cfg: &PresetConfig) -> Result<ArchGraph> {
        let width = cfg.width.unwrap_or_else(|| self.default_width());
        let downsample_at = cfg
            .downsample_at
            .unwrap_or_else(|| self.default_downsample_at());
        if !(width.is_finite() && width > 0.0) {
            return Err(ArchError::Invalid(format!("width {width} must be > 0")));
        }
        let variant = match self {
            Preset::Resnet50_3d => VariantGeom {
                conv1_kt: 7,
                temporal_pad: true,
                pool: PoolNode {
                    kernel: (3, 3, 3),
                    stride: (2, 2, 2),
                    padding: (1, 1, 1),
                },
                first_block_kt: [3, 3, 3, 3],
                rest_block_kt: 3,
                stage_t_stride: [1, 2, 2, 2],
            },
            Preset::VideoBagnet(v) => {
                let first_block_kt = match v {
                    1 => [1, 1, 1, 1],
                    9 => [3, 3, 1, 1],
                    17 => [3, 3, 3, 1],
                    33 => [3, 3, 3, 3],
                    other => {
                        return Err(ArchError::Invalid(format!(
                            "video bagnet variant {other} not in {{1, 9, 17, 33}}"
                        )))
                    }
                };
                // time is only downsampled where the stage still grows the RF
                let mut stage_t_stride = [1usize; 4];
                for s in 1..4 {
                    stage_t_stride[s] = if first_block_kt[s] == 3 { 2 } else { 1 };
                }
                VariantGeom {
                    conv1_kt: if *v == 1 { 1 } else { 3 },
                    temporal_pad: false,
                    pool: PoolNode {
                        kernel: (1, 3, 3),
                        stride: (1, 2, 2),
                        padding: (0, 1, 1),
                    },
                    first_block_kt,
                    rest_block_kt: 1,
                    stage_t_stride,
                }
            }
        };
        Ok(build_bottleneck_net(
            &variant,
            width,
            cfg.n_classes,
            cfg.in_channels,
            downsample_at,
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PresetConfig {
    /// Channel widening multiplier; `None` uses the preset default.
    pub width: Option<f64>,
    pub n_classes: usize,
    pub in_channels: usize,
    pub downsample_at: Option<DownsampleAt>,
}

impl Default for PresetConfig {
    fn default() -> Self {
        PresetConfig {
            width: None,
            n_classes: 3,
            in_channels: 1,
            downsample_at: None,
        }
    }
}

struct VariantGeom {
    conv1_kt: usize,
    /// Temporal padding (kt-1)/2 everywhere when true, zero when false.
    temporal_pad: bool,
    pool: PoolNode,
    first_block_kt: [usize; 4],
    rest_block_kt: usize,
    stage_t_stride: [usize; 4],
}

fn widen(channels: usize, width: f64) -> usize {
    ((channels as f64 * width).round() as usize).max(1)
}

struct Builder {
    nodes: Vec<LayerNode>,
}

impl Builder {
    fn push(&mut self, name: String, kind: LayerKind, preds: Vec<usize>) -> usize {
        self.nodes.push(LayerNode { name, kind, preds });
        self.nodes.len() - 1
    }

    fn conv_bn_relu(
        &mut self,
        prefix: &str,
        conv: ConvNode,
        preds: Vec<usize>,
        relu: bool,
    ) -> usize {
        let c = self.push(format!("{prefix}.conv"), LayerKind::Conv(conv), preds);
        let b = self.push(
            format!("{prefix}.bn"),
            LayerKind::BatchNorm {
                channels: conv.out_channels,
            },
            vec![c],
        );
        if relu {
            self.push(format!("{prefix}.relu"), LayerKind::Relu, vec![b])
        } else {
            b
        }
    }
}

const STAGE_BASES: [usize; 4] = [64, 128, 256, 512];
const STAGE_BLOCKS: [usize; 4] = [3, 4, 6, 3];

fn build_bottleneck_net(
    geom: &VariantGeom,
    width: f64,
    n_classes: usize,
    in_channels: usize,
    downsample_at: DownsampleAt,
) -> ArchGraph {
    let tp = |kt: usize| if geom.temporal_pad { (kt - 1) / 2 } else { 0 };
    let mut b = Builder { nodes: Vec::new() };
    let stem_ch = widen(64, width);
    let mut last = b.conv_bn_relu(
        "conv1",
        ConvNode {
            in_channels,
            out_channels: stem_ch,
            kernel: (geom.conv1_kt, 7, 7),
            stride: (1, 2, 2),
            padding: (tp(geom.conv1_kt), 3, 3),
            bias: false,
        },
        vec![],
        true,
    );
    last = b.push("pool1".into(), LayerKind::MaxPool(geom.pool), vec![last]);

    let mut in_ch = stem_ch;
    for (stage, (&base, &blocks)) in STAGE_BASES.iter().zip(&STAGE_BLOCKS).enumerate() {
        let mid_ch = widen(base, width);
        let out_ch = widen(base * 4, width);
        let spatial_stride = if stage == 0 { 1 } else { 2 };
        for block in 0..blocks {
            let prefix = format!("conv{}_{}", stage + 2, block + 1);
            let first = block == 0;
            let kt = if first {
                geom.first_block_kt[stage]
            } else {
                geom.rest_block_kt
            };
            let stride = if first {
                (geom.stage_t_stride[stage], spatial_stride, spatial_stride)
            } else {
                (1, 1, 1)
            };
            last = bottleneck_block(
                &mut b,
                &prefix,
                last,
                in_ch,
                mid_ch,
                out_ch,
                kt,
                tp(kt),
                stride,
                downsample_at,
            );
            in_ch = out_ch;
        }
    }

    last = b.push("avgpool".into(), LayerKind::GlobalPool, vec![last]);
    b.push(
        "fc".into(),
        LayerKind::Fc {
            in_features: in_ch,
            out_features: n_classes,
        },
        vec![last],
    );
    ArchGraph { nodes: b.nodes }
}

#[allow(clippy::too_many_arguments)]
fn bottleneck_block(
    b: &mut Builder,
    prefix: &str,
    input: usize,
    in_ch: usize,
    mid_ch: usize,
    out_ch: usize,
    kt: usize,
    t_pad: usize,
    stride: (usize, usize, usize),
    downsample_at: DownsampleAt,
) -> usize {
    let unit = (1, 1, 1);
    let (entry_stride, mid_stride) = match downsample_at {
        DownsampleAt::BottleneckEntry => (stride, unit),
        DownsampleAt::MidConv => (unit, stride),
    };
    // the core conv eats kt-1 frames when unpadded; the shortcut must too
    let t_crop = kt > 1 && t_pad == 0;

    // shortcut first so the main path's expand conv stays the deepest conv
    let needs_proj = in_ch != out_ch || stride != unit;
    debug_assert!(needs_proj || !t_crop, "identity shortcut cannot crop time");
    let shortcut = if needs_proj {
        let (proj_stride, crop_pool) = if !t_crop {
            (stride, None)
        } else {
            match downsample_at {
                DownsampleAt::BottleneckEntry => (
                    stride,
                    Some(PoolNode {
                        kernel: (kt, 1, 1),
                        stride: unit,
                        padding: (0, 0, 0),
                    }),
                ),
                DownsampleAt::MidConv => (
                    (1, stride.1, stride.2),
                    Some(PoolNode {
                        kernel: (kt, 1, 1),
                        stride: (stride.0, 1, 1),
                        padding: (0, 0, 0),
                    }),
                ),
            }
        };
        let mut s = b.conv_bn_relu(
            &format!("{prefix}.proj"),
            ConvNode {
                in_channels: in_ch,
                out_channels: out_ch,
                kernel: (1, 1, 1),
                stride: proj_stride,
                padding: (0, 0, 0),
                bias: false,
            },
            vec![input],
            false,
        );
        if let Some(pool) = crop_pool {
            s = b.push(
                format!("{prefix}.proj.crop"),
                LayerKind::MaxPool(pool),
                vec![s],
            );
        }
        s
    } else {
        input
    };

    let x = b.conv_bn_relu(
        &format!("{prefix}.a"),
        ConvNode {
            in_channels: in_ch,
            out_channels: mid_ch,
            kernel: (1, 1, 1),
            stride: entry_stride,
            padding: (0, 0, 0),
            bias: false,
        },
        vec![input],
        true,
    );
    let x = b.conv_bn_relu(
        &format!("{prefix}.b"),
        ConvNode {
            in_channels: mid_ch,
            out_channels: mid_ch,
            kernel: (kt, 3, 3),
            stride: mid_stride,
            padding: (t_pad, 1, 1),
            bias: false,
        },
        vec![x],
        true,
    );
    let x = b.conv_bn_relu(
        &format!("{prefix}.c"),
        ConvNode {
            in_channels: mid_ch,
            out_channels: out_ch,
            kernel: (1, 1, 1),
            stride: (1, 1, 1),
            padding: (0, 0, 0),
            bias: false,
        },
        vec![x],
        false,
    );
    let add = b.push(
        format!("{prefix}.add"),
        LayerKind::ResidualAdd,
        vec![x, shortcut],
    );
    b.push(format!("{prefix}.relu"), LayerKind::Relu, vec![add])
}

/// Learned parameter count: conv weights (+bias), fc weight and bias,
/// batch-norm gain/shift. Running statistics are not learned.
pub fn param_count(arch: &ArchGraph) -> u64 {
    arch.nodes
        .iter()
        .map(|n| match &n.kind {
            LayerKind::Conv(c) => {
                let (kt, kh, kw) = c.kernel;
                let w = (kt * kh * kw * c.in_channels * c.out_channels) as u64;
                w + if c.bias { c.out_channels as u64 } else { 0 }
            }
            LayerKind::Fc {
                in_features,
                out_features,
            } => (in_features * out_features + out_features) as u64,
            LayerKind::BatchNorm { channels } => 2 * *channels as u64,
            _ => 0,
        })
        .sum()
}
