//! On-disk split container: a directory holding `manifest.json` (config
//! echo and per-video metadata) and `videos.bin` (one framed record per
//! video: magic "DMMV", u32 version, u32 T/H/W, raw u8 frames, all
//! little-endian).

use crate::config::DmmConfig;
use crate::error::{DmmError, Result};
use crate::generate::{Provenance, Segment, VideoSample};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::Path;

const MAGIC: &[u8; 4] = b"DMMV";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    version: u32,
    config: DmmConfig,
    videos: Vec<VideoMeta>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct VideoMeta {
    label: usize,
    segments: [Segment; 2],
    permuted: bool,
    provenance: Provenance,
}

/// Writes a split to `dir` (created if missing).
pub fn write_container(dir: &Path, config: &DmmConfig, videos: &[VideoSample]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let manifest = Manifest {
        version: VERSION,
        config: config.clone(),
        videos: videos
            .iter()
            .map(|v| VideoMeta {
                label: v.label,
                segments: v.segments,
                permuted: v.permuted,
                provenance: v.provenance.clone(),
            })
            .collect(),
    };
    let json = serde_json::to_vec_pretty(&manifest)
        .map_err(|e| DmmError::Container(format!("manifest serialization failed: {e}")))?;
    fs::write(dir.join("manifest.json"), json)?;

    let mut blob = Vec::new();
    for v in videos {
        blob.extend_from_slice(MAGIC);
        blob.extend_from_slice(&VERSION.to_le_bytes());
        for dim in [v.t, v.h, v.w] {
            let dim = u32::try_from(dim)
                .map_err(|_| DmmError::Container(format!("dimension {dim} exceeds u32")))?;
            blob.extend_from_slice(&dim.to_le_bytes());
        }
        if v.frames.len() != v.t * v.h * v.w {
            return Err(DmmError::Container(format!(
                "video has {} frame bytes, expected {}",
                v.frames.len(),
                v.t * v.h * v.w
            )));
        }
        blob.extend_from_slice(&v.frames);
    }
    let mut f = fs::File::create(dir.join("videos.bin"))?;
    f.write_all(&blob)?;
    Ok(())
}

/// Reads a split back; validates the manifest against the blob.
pub fn read_container(dir: &Path) -> Result<(DmmConfig, Vec<VideoSample>)> {
    let manifest: Manifest = serde_json::from_slice(&fs::read(dir.join("manifest.json"))?)
        .map_err(|e| DmmError::Container(format!("manifest parse failed: {e}")))?;
    if manifest.version != VERSION {
        return Err(DmmError::Container(format!(
            "manifest version {} unsupported (expected {VERSION})",
            manifest.version
        )));
    }
    let blob = fs::read(dir.join("videos.bin"))?;
    let mut videos = Vec::with_capacity(manifest.videos.len());
    let mut pos = 0usize;
    for meta in &manifest.videos {
        let header = blob.get(pos..pos + 20).ok_or_else(|| {
            DmmError::Container(format!(
                "videos.bin truncated: {} videos promised, blob ends at video {}",
                manifest.videos.len(),
                videos.len()
            ))
        })?;
        if &header[..4] != MAGIC {
            return Err(DmmError::Container(format!(
                "bad record magic at byte {pos}"
            )));
        }
        let word = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap());
        if word(4) != VERSION {
            return Err(DmmError::Container(format!(
                "record version {} unsupported at byte {pos}",
                word(4)
            )));
        }
        let (t, h, w) = (word(8) as usize, word(12) as usize, word(16) as usize);
        pos += 20;
        let frames = blob
            .get(pos..pos + t * h * w)
            .ok_or_else(|| DmmError::Container(format!("videos.bin truncated at byte {pos}")))?
            .to_vec();
        pos += t * h * w;
        videos.push(VideoSample {
            frames,
            t,
            h,
            w,
            label: meta.label,
            segments: meta.segments,
            permuted: meta.permuted,
            provenance: meta.provenance.clone(),
        });
    }
    if pos != blob.len() {
        return Err(DmmError::Container(format!(
            "videos.bin has {} trailing bytes beyond the {} videos in the manifest",
            blob.len() - pos,
            manifest.videos.len()
        )));
    }
    Ok((manifest.config, videos))
}
