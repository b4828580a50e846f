//! In-memory dataset: normalized video tensors plus labels, with batch
//! assembly.

use crate::error::{HarnessError, Result};
use dmm_data::VideoSample;
use nn_core::{Scalar, Tensor5};

#[derive(Debug, Clone)]
pub struct Dataset {
    /// Normalized [0, 1] frames, one Vec per video, row-major (T, H, W).
    pub videos: Vec<Vec<f32>>,
    pub labels: Vec<usize>,
    pub t: usize,
    pub h: usize,
    pub w: usize,
}

impl Dataset {
    pub fn from_samples(samples: &[VideoSample]) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| HarnessError::Data("empty sample list".into()))?;
        let (t, h, w) = (first.t, first.h, first.w);
        let mut videos = Vec::with_capacity(samples.len());
        let mut labels = Vec::with_capacity(samples.len());
        for s in samples {
            if (s.t, s.h, s.w) != (t, h, w) {
                return Err(HarnessError::Data(format!(
                    "inconsistent video shapes: ({}, {}, {}) vs ({t}, {h}, {w})",
                    s.t, s.h, s.w
                )));
            }
            videos.push(s.frames_f32());
            labels.push(s.label);
        }
        Ok(Dataset {
            videos,
            labels,
            t,
            h,
            w,
        })
    }

    pub fn len(&self) -> usize {
        self.videos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.videos.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.labels.iter().copied().max().map_or(0, |m| m + 1)
    }

    /// Assembles videos `indices` into a single-channel (N, 1, T, H, W)
    /// batch tensor plus labels.
    pub fn batch<T: Scalar>(&self, indices: &[usize]) -> Result<(Tensor5<T>, Vec<usize>)> {
        let n = indices.len();
        let frame = self.t * self.h * self.w;
        let mut data = Vec::with_capacity(n * frame);
        let mut labels = Vec::with_capacity(n);
        for &i in indices {
            let v = self
                .videos
                .get(i)
                .ok_or_else(|| HarnessError::Data(format!("video index {i} out of range")))?;
            data.extend(v.iter().map(|&x| T::from_f64_s(x as f64)));
            labels.push(self.labels[i]);
        }
        Ok((
            Tensor5::from_vec([n, 1, self.t, self.h, self.w], data)?,
            labels,
        ))
    }
}
