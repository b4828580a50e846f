//! Order-sensitivity metric: the fraction of a network's last-conv
//! shifting windows whose (clipped) input coverage lies inside a single
//! sub-action segment. A high ratio means the model can classify from
//! order-free evidence, i.e. its sensitivity to sub-action order is low.

use arch_graph::{rf_trace, ArchGraph, Window};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SensitivityError {
    #[error("invalid segment layout: {0}")]
    Layout(String),
    #[error("architecture produced no windows: {0}")]
    NoWindows(String),
    #[error(transparent)]
    Arch(#[from] arch_graph::ArchError),
}

pub type Result<T> = std::result::Result<T, SensitivityError>;

/// Contiguous, non-overlapping segments covering `[0, total_len)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentLayout {
    pub total_len: usize,
    /// Half-open `(start, end)` intervals in order.
    pub segments: Vec<(usize, usize)>,
}

impl SegmentLayout {
    /// The DMM layout: two segments of `d` frames.
    pub fn two_equal(d: usize) -> Self {
        SegmentLayout {
            total_len: 2 * d,
            segments: vec![(0, d), (d, 2 * d)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(SensitivityError::Layout("no segments".into()));
        }
        let mut cursor = 0;
        for &(s, e) in &self.segments {
            if s != cursor || e <= s {
                return Err(SensitivityError::Layout(format!(
                    "segment ({s}, {e}) breaks contiguous cover at frame {cursor}"
                )));
            }
            cursor = e;
        }
        if cursor != self.total_len {
            return Err(SensitivityError::Layout(format!(
                "segments cover [0, {cursor}), layout promises {}",
                self.total_len
            )));
        }
        Ok(())
    }

    /// True iff frames `[start, end]` (inclusive) lie inside one segment.
    fn contains_interval(&self, start: usize, end: usize) -> bool {
        self.segments.iter().any(|&(s, e)| s <= start && end < e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowClass {
    /// Clipped coverage inside exactly one segment.
    Single,
    /// Coverage straddles a segment boundary.
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub single_window_count: usize,
    pub total_window_count: usize,
    /// single / total.
    pub ratio: f64,
    pub windows: Vec<(Window, WindowClass)>,
}

/// Classifies every last-conv window of `arch` against `layout`.
pub fn window_ratio(arch: &ArchGraph, layout: &SegmentLayout) -> Result<SensitivityReport> {
    window_ratio_spatial(arch, layout, 64, 64)
}

/// As [`window_ratio`] with explicit spatial input extents (the metric
/// itself only depends on temporal geometry).
pub fn window_ratio_spatial(
    arch: &ArchGraph,
    layout: &SegmentLayout,
    h: usize,
    w: usize,
) -> Result<SensitivityReport> {
    layout.validate()?;
    let trace = rf_trace(arch, layout.total_len, h, w)?;
    if trace.is_empty() {
        return Err(SensitivityError::NoWindows(format!(
            "last conv has zero temporal outputs for input length {}",
            layout.total_len
        )));
    }
    let windows: Vec<(Window, WindowClass)> = trace
        .into_iter()
        .map(|win| {
            let class = if layout.contains_interval(win.start, win.end) {
                WindowClass::Single
            } else {
                WindowClass::Mixed
            };
            (win, class)
        })
        .collect();
    let single = windows
        .iter()
        .filter(|(_, c)| *c == WindowClass::Single)
        .count();
    Ok(SensitivityReport {
        single_window_count: single,
        total_window_count: windows.len(),
        ratio: single as f64 / windows.len() as f64,
        windows,
    })
}

/// One `sweep` output row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub model: String,
    pub d: usize,
    pub video_len: usize,
    pub single_windows: usize,
    pub total_windows: usize,
    pub ratio: f64,
}

/// Evaluates the metric over the cross product of named architectures
/// and sub-action durations (video length 2d each).
pub fn sweep(archs: &[(String, ArchGraph)], durations: &[usize]) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(archs.len() * durations.len());
    for (name, arch) in archs {
        for &d in durations {
            let layout = SegmentLayout::two_equal(d);
            let report = window_ratio(arch, &layout)?;
            rows.push(SweepRow {
                model: name.clone(),
                d,
                video_len: layout.total_len,
                single_windows: report.single_window_count,
                total_windows: report.total_window_count,
                ratio: report.ratio,
            });
        }
    }
    Ok(rows)
}

/// CSV rendering of sweep rows (header included).
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("model,d,video_len,single_windows,total_windows,ratio\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.model, r.d, r.video_len, r.single_windows, r.total_windows, r.ratio
        ));
    }
    out
}
