//! Declarative 3D-conv architecture descriptions plus static analysis:
//! temporal receptive field, jump and offset recurrences, full shape
//! inference, parameter counting and last-layer window traces.

pub mod analysis;
pub mod error;
pub mod graph;
pub mod presets;
pub mod spec;

pub use analysis::{propagate, rf_calculus, rf_trace, shape_inference, NodeGeometry, RfReport, Window};
pub use error::{ArchError, Result};
pub use graph::{ArchGraph, ConvNode, LayerKind, LayerNode, PoolNode};
pub use presets::{param_count, DownsampleAt, Preset, PresetConfig};
pub use spec::ArchSpec;
