//! On-disk architecture descriptions: a JSON document naming either a
//! preset (with optional overrides) or a custom node list.

use crate::error::{ArchError, Result};
use crate::graph::{ArchGraph, LayerNode};
use crate::presets::{DownsampleAt, Preset, PresetConfig};
use serde::{Deserialize, Serialize};

/// Architecture description file contents. Exactly one of `preset` and
/// `nodes` must be present; the remaining fields only apply to presets.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchSpec {
    /// Preset name, e.g. "resnet50-3d" or "video-bagnet-9".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// Custom topology: nodes in topological order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<Vec<LayerNode>>,
    /// Multiplies the preset's default channel width.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width_multiplier: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_classes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub in_channels: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub downsample_at: Option<DownsampleAt>,
}

impl ArchSpec {
    pub fn from_json(json: &str) -> Result<Self> {
        serde_json::from_str(json)
            .map_err(|e| ArchError::Invalid(format!("architecture description: {e}")))
    }

    /// A human-readable name for reports.
    pub fn name(&self) -> String {
        match (&self.preset, &self.nodes) {
            (Some(p), _) => p.clone(),
            _ => "custom".into(),
        }
    }

    pub fn build(&self) -> Result<ArchGraph> {
        match (&self.preset, &self.nodes) {
            (Some(_), Some(_)) => Err(ArchError::Invalid(
                "architecture description has both 'preset' and 'nodes'; pick one".into(),
            )),
            (None, None) => Err(ArchError::Invalid(
                "architecture description needs 'preset' or 'nodes'".into(),
            )),
            (None, Some(nodes)) => {
                for field in ["width_multiplier", "n_classes", "in_channels", "downsample_at"] {
                    let set = match field {
                        "width_multiplier" => self.width_multiplier.is_some(),
                        "n_classes" => self.n_classes.is_some(),
                        "in_channels" => self.in_channels.is_some(),
                        _ => self.downsample_at.is_some(),
                    };
                    if set {
                        return Err(ArchError::Invalid(format!(
                            "'{field}' only applies to presets, not custom node lists"
                        )));
                    }
                }
                let arch = ArchGraph { nodes: nodes.clone() };
                arch.validate()?;
                Ok(arch)
            }
            (Some(name), None) => {
                let preset = Preset::from_name(name)?;
                let defaults = PresetConfig::default();
                preset.build(&PresetConfig {
                    width: Some(
                        preset.default_width() * self.width_multiplier.unwrap_or(1.0),
                    ),
                    n_classes: self.n_classes.unwrap_or(defaults.n_classes),
                    in_channels: self.in_channels.unwrap_or(defaults.in_channels),
                    downsample_at: self.downsample_at,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::rf_calculus;

    #[test]
    fn preset_description_builds_with_overrides() {
        let spec = ArchSpec::from_json(
            r#"{"preset": "video-bagnet-9", "n_classes": 5, "width_multiplier": 0.5}"#,
        )
        .unwrap();
        let arch = spec.build().unwrap();
        assert_eq!(rf_calculus(&arch, 64, 64, 64).unwrap().rf_t, 9);
        let fc = arch
            .nodes
            .iter()
            .find_map(|n| match n.kind {
                crate::graph::LayerKind::Fc { out_features, .. } => Some(out_features),
                _ => None,
            })
            .unwrap();
        assert_eq!(fc, 5);
    }

    #[test]
    fn custom_node_list_round_trips_through_json() {
        let arch = Preset::VideoBagnet(1)
            .build(&PresetConfig::default())
            .unwrap();
        let spec = ArchSpec {
            nodes: Some(arch.nodes.clone()),
            ..Default::default()
        };
        let json = serde_json::to_string(&spec).unwrap();
        let rebuilt = ArchSpec::from_json(&json).unwrap().build().unwrap();
        assert_eq!(rebuilt, arch);
        assert_eq!(ArchSpec::from_json(&json).unwrap().name(), "custom");
    }

    #[test]
    fn conflicting_or_empty_descriptions_are_rejected() {
        assert!(ArchSpec::from_json("{}").unwrap().build().is_err());
        let both = r#"{"preset": "resnet50-3d", "nodes": []}"#;
        assert!(ArchSpec::from_json(both).unwrap().build().is_err());
        let misplaced = r#"{"nodes": [], "n_classes": 3}"#;
        assert!(ArchSpec::from_json(misplaced).unwrap().build().is_err());
        assert!(ArchSpec::from_json(r#"{"bogus": 1}"#).is_err());
    }
}
