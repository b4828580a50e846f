//! Deterministic Directional Moving MNIST: digit glyph sources (IDX
//! files or procedural fallbacks), trajectory rendering with elastic
//! border reflection, split generation with controlled sub-action order
//! permutation, and an on-disk container format.

pub mod config;
pub mod container;
pub mod error;
pub mod generate;
pub mod glyph;
pub mod idx;
pub mod render;
pub mod rng;

pub use config::{ClassDef, DmmConfig, SubAction};
pub use container::{read_container, write_container};
pub use error::{DmmError, Result};
pub use generate::{
    generate, generate_split, generate_video, Provenance, Segment, Split, Splits, VideoSample,
};
pub use glyph::{procedural_glyphs, DigitGlyph, GlyphSource};
pub use idx::{parse_idx_images, parse_idx_labels};
