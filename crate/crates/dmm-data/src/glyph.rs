//! Digit glyphs: MNIST-sourced or procedural fallbacks, cropped to
//! their tight content bounding box so small canvases stay feasible.

use crate::error::{DmmError, Result};
use crate::idx::parse_idx_images;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceSplit {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigitGlyph {
    /// Row-major grayscale intensities, tight-cropped to content.
    pub pixels: Vec<u8>,
    pub h: usize,
    pub w: usize,
    pub source_index: usize,
    pub source_split: SourceSplit,
}

impl DigitGlyph {
    /// Builds a glyph from a full 28x28 (or other-sized) image by
    /// cropping to the smallest box containing all non-zero pixels.
    pub fn from_image(image: &[u8], h: usize, w: usize, source_index: usize, source_split: SourceSplit) -> Result<Self> {
        if image.len() != h * w {
            return Err(DmmError::Config(format!(
                "glyph image has {} bytes, expected {h}x{w}",
                image.len()
            )));
        }
        let (mut y0, mut y1, mut x0, mut x1) = (h, 0usize, w, 0usize);
        for y in 0..h {
            for x in 0..w {
                if image[y * w + x] > 0 {
                    y0 = y0.min(y);
                    y1 = y1.max(y);
                    x0 = x0.min(x);
                    x1 = x1.max(x);
                }
            }
        }
        if y0 > y1 {
            return Err(DmmError::Config(format!(
                "glyph {source_index} is entirely black"
            )));
        }
        let (gh, gw) = (y1 - y0 + 1, x1 - x0 + 1);
        let mut pixels = Vec::with_capacity(gh * gw);
        for y in y0..=y1 {
            pixels.extend_from_slice(&image[y * w + x0..y * w + x1 + 1]);
        }
        Ok(DigitGlyph {
            pixels,
            h: gh,
            w: gw,
            source_index,
            source_split,
        })
    }
}

/// Digit images to animate; train glyphs feed train videos, test
/// glyphs feed both test splits.
#[derive(Debug, Clone)]
pub struct GlyphSource {
    pub train: Vec<DigitGlyph>,
    pub test: Vec<DigitGlyph>,
}

impl GlyphSource {
    pub fn from_idx_bytes(train_images: &[u8], test_images: &[u8]) -> Result<Self> {
        let load = |bytes: &[u8], split: SourceSplit| -> Result<Vec<DigitGlyph>> {
            let (images, h, w) = parse_idx_images(bytes)?;
            images
                .iter()
                .enumerate()
                .map(|(i, img)| DigitGlyph::from_image(img, h, w, i, split))
                .collect()
        };
        Ok(GlyphSource {
            train: load(train_images, SourceSplit::Train)?,
            test: load(test_images, SourceSplit::Test)?,
        })
    }

    /// Procedural stand-in so generation works without MNIST files.
    pub fn procedural() -> Self {
        GlyphSource {
            train: procedural_glyphs(SourceSplit::Train),
            test: procedural_glyphs(SourceSplit::Test),
        }
    }
}

/// Three drawn shapes (box, cross, disc) on a 20x20 stencil.
pub fn procedural_glyphs(split: SourceSplit) -> Vec<DigitGlyph> {
    const S: usize = 20;
    let mut shapes: Vec<Vec<u8>> = vec![vec![0u8; S * S]; 3];
    for i in 0..S {
        // box outline, 2 px thick
        for t in 0..2 {
            shapes[0][t * S + i] = 255;
            shapes[0][(S - 1 - t) * S + i] = 255;
            shapes[0][i * S + t] = 255;
            shapes[0][i * S + S - 1 - t] = 255;
        }
        // cross through the center
        for t in 0..2 {
            shapes[1][(S / 2 - 1 + t) * S + i] = 255;
            shapes[1][i * S + S / 2 - 1 + t] = 255;
        }
    }
    // filled disc
    let c = (S as i64 - 1) as f64 / 2.0;
    for y in 0..S {
        for x in 0..S {
            let dy = y as f64 - c;
            let dx = x as f64 - c;
            if (dy * dy + dx * dx).sqrt() <= S as f64 / 2.0 - 1.0 {
                shapes[2][y * S + x] = 200;
            }
        }
    }
    shapes
        .iter()
        .enumerate()
        .map(|(i, img)| DigitGlyph::from_image(img, S, S, i, split).unwrap())
        .collect()
}
