//! Split generation: class-balanced videos with canonical or permuted
//! sub-action order, one RNG substream per video.

use crate::config::{DmmConfig, SubAction};
use crate::error::{DmmError, Result};
use crate::glyph::{GlyphSource, SourceSplit};
use crate::render::render_trajectory;
use crate::rng::substream_rng;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    TestNoperm,
    TestPerm,
}

impl Split {
    /// Substream id. The two test splits share a stream on purpose:
    /// test_perm is the same set of videos as test_noperm, differing only
    /// in the (last-drawn) permutation decision, so a permutation
    /// probability of 0 reproduces test_noperm exactly.
    pub fn id(&self) -> u64 {
        match self {
            Split::Train => 0,
            Split::TestNoperm | Split::TestPerm => 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::TestNoperm => "test_noperm",
            Split::TestPerm => "test_perm",
        }
    }
}

/// One sub-action's frame range; `end` is exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub sub_action: SubAction,
    pub start: usize,
    pub end: usize,
}

/// Everything needed to re-derive a video from scratch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub glyph_index: usize,
    pub glyph_split: SourceSplit,
    /// Top-left (y, x) of the glyph in frame 0.
    pub start: (usize, usize),
    pub speed: usize,
    /// (sign_y, sign_x) per sub-action, in played order.
    pub signs: [(i8, i8); 2],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VideoSample {
    /// Row-major (T, H, W) 8-bit grayscale.
    pub frames: Vec<u8>,
    pub t: usize,
    pub h: usize,
    pub w: usize,
    pub label: usize,
    pub segments: [Segment; 2],
    pub permuted: bool,
    pub provenance: Provenance,
}

impl VideoSample {
    /// Frames normalized to [0, 1].
    pub fn frames_f32(&self) -> Vec<f32> {
        self.frames.iter().map(|&p| p as f32 / 255.0).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Splits {
    pub config: DmmConfig,
    pub train: Vec<VideoSample>,
    pub test_noperm: Vec<VideoSample>,
    pub test_perm: Vec<VideoSample>,
}

/// Generates the three splits. Train and test_noperm always play each
/// class's canonical order; test_perm swaps the two sub-actions with the
/// configured probability, independently per video.
pub fn generate(config: &DmmConfig, glyphs: &GlyphSource) -> Result<Splits> {
    config.validate()?;
    if glyphs.train.is_empty() || glyphs.test.is_empty() {
        return Err(DmmError::Generation("glyph source has an empty split".into()));
    }
    Ok(Splits {
        config: config.clone(),
        train: generate_split(config, glyphs, Split::Train)?,
        test_noperm: generate_split(config, glyphs, Split::TestNoperm)?,
        test_perm: generate_split(config, glyphs, Split::TestPerm)?,
    })
}

/// Generates a single split (all `3 * videos_per_class` videos).
pub fn generate_split(
    config: &DmmConfig,
    glyphs: &GlyphSource,
    split: Split,
) -> Result<Vec<VideoSample>> {
    config.validate()?;
    let n = config.classes.len() * config.videos_per_class;
    (0..n).map(|i| generate_video(config, glyphs, split, i)).collect()
}

/// Generates video `index` of a split in isolation, from its own RNG
/// substream; the label cycles through classes in blocks.
pub fn generate_video(
    config: &DmmConfig,
    glyphs: &GlyphSource,
    split: Split,
    index: usize,
) -> Result<VideoSample> {
    let pool = match split {
        Split::Train => &glyphs.train,
        Split::TestNoperm | Split::TestPerm => &glyphs.test,
    };
    let label = index / config.videos_per_class;
    let canonical = config.classes[label];
    let mut rng = substream_rng(config.master_seed, split.id(), index as u64);

    let glyph = &pool[rng.gen_range(0..pool.len())];
    if glyph.h > config.canvas_h {
        return Err(DmmError::Generation(format!(
            "canvas_h {} is smaller than glyph height {}",
            config.canvas_h, glyph.h
        )));
    }
    if glyph.w > config.canvas_w {
        return Err(DmmError::Generation(format!(
            "canvas_w {} is smaller than glyph width {}",
            config.canvas_w, glyph.w
        )));
    }
    let speed = config.speeds[rng.gen_range(0..config.speeds.len())];
    let sign = |rng: &mut rand_chacha::ChaCha8Rng| if rng.gen::<bool>() { 1i8 } else { -1 };
    let signs_canonical: [(i8, i8); 2] = [
        draw_signs(canonical.0, &mut rng, sign),
        draw_signs(canonical.1, &mut rng, sign),
    ];
    let start = (
        rng.gen_range(0..=config.canvas_h - glyph.h),
        rng.gen_range(0..=config.canvas_w - glyph.w),
    );
    // drawn last so splits agree byte-for-byte when the probability is 0
    let permuted = match split {
        Split::TestPerm => rng.gen_bool(config.permutation_probability),
        _ => false,
    };
    let (actions, signs) = if permuted {
        (
            [canonical.1, canonical.0],
            [signs_canonical[1], signs_canonical[0]],
        )
    } else {
        ([canonical.0, canonical.1], signs_canonical)
    };

    let frames = render_trajectory(
        glyph,
        start,
        actions,
        signs,
        speed,
        config.d,
        (config.canvas_h, config.canvas_w),
    );
    Ok(VideoSample {
        frames,
        t: 2 * config.d,
        h: config.canvas_h,
        w: config.canvas_w,
        label,
        segments: [
            Segment {
                sub_action: actions[0],
                start: 0,
                end: config.d,
            },
            Segment {
                sub_action: actions[1],
                start: config.d,
                end: 2 * config.d,
            },
        ],
        permuted,
        provenance: Provenance {
            glyph_index: glyph.source_index,
            glyph_split: glyph.source_split,
            start,
            speed,
            signs,
        },
    })
}

fn draw_signs(
    action: SubAction,
    rng: &mut rand_chacha::ChaCha8Rng,
    sign: impl Fn(&mut rand_chacha::ChaCha8Rng) -> i8,
) -> (i8, i8) {
    match action {
        SubAction::Vertical => (sign(rng), 0),
        SubAction::Horizontal => (0, sign(rng)),
        SubAction::Diagonal => (sign(rng), sign(rng)),
    }
}
