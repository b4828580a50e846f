//! Dataset configuration.

use crate::error::{DmmError, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubAction {
    Vertical,
    Horizontal,
    Diagonal,
}

impl SubAction {
    pub fn name(&self) -> &'static str {
        match self {
            SubAction::Vertical => "vertical",
            SubAction::Horizontal => "horizontal",
            SubAction::Diagonal => "diagonal",
        }
    }
}

/// A class is an ordered pair of sub-actions; the order is the one seen
/// during training.
pub type ClassDef = (SubAction, SubAction);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmmConfig {
    pub canvas_h: usize,
    pub canvas_w: usize,
    /// Sub-action duration in frames; videos are 2d frames long.
    pub d: usize,
    /// Pixels per frame; one speed is drawn per video.
    pub speeds: Vec<usize>,
    /// Canonical (training-order) sub-action pair per class.
    pub classes: Vec<ClassDef>,
    pub videos_per_class: usize,
    /// Probability that a test_perm video swaps its two sub-actions.
    pub permutation_probability: f64,
    pub master_seed: u64,
}

impl Default for DmmConfig {
    fn default() -> Self {
        DmmConfig {
            canvas_h: 64,
            canvas_w: 64,
            d: 64,
            speeds: vec![1, 2],
            classes: default_classes(),
            videos_per_class: 1000,
            permutation_probability: 0.5,
            master_seed: 0,
        }
    }
}

/// The paper's three classes in listing order.
pub fn default_classes() -> Vec<ClassDef> {
    vec![
        (SubAction::Vertical, SubAction::Horizontal),
        (SubAction::Vertical, SubAction::Diagonal),
        (SubAction::Horizontal, SubAction::Diagonal),
    ]
}

impl DmmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(DmmError::Config("d must be >= 1".into()));
        }
        if self.speeds.is_empty() {
            return Err(DmmError::Config("speeds must be non-empty".into()));
        }
        if self.videos_per_class == 0 {
            return Err(DmmError::Config("videos_per_class must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.permutation_probability) {
            return Err(DmmError::Config(format!(
                "permutation_probability {} not in [0, 1]",
                self.permutation_probability
            )));
        }
        let mut unordered: Vec<_> = self
            .classes
            .iter()
            .map(|&(a, b)| {
                let mut p = [a.name(), b.name()];
                p.sort();
                p
            })
            .collect();
        unordered.sort();
        let mut expected: Vec<_> = default_classes()
            .iter()
            .map(|&(a, b)| {
                let mut p = [a.name(), b.name()];
                p.sort();
                p
            })
            .collect();
        expected.sort();
        if unordered != expected {
            return Err(DmmError::Config(
                "classes must be exactly the pairs {V,H}, {V,D}, {H,D}".into(),
            ));
        }
        Ok(())
    }
}
