//! The order-sensitivity experiment driver: train large-RF and small-RF
//! models on DMM splits, evaluate on same-order and permuted-order test
//! sets, and join each row with the window-ratio metric.

use crate::data::Dataset;
use crate::error::{HarnessError, Result};
use crate::network::Network;
use crate::train::{evaluate, train, TrainConfig, TrainOutcome};
use arch_graph::{Preset, PresetConfig};
use dmm_data::{generate, DmmConfig, GlyphSource};
use order_sensitivity::{window_ratio, SegmentLayout};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    /// Paper-scale geometry (64 canvas, 1000 videos/class, full widths).
    /// Provided for completeness; full-width training is not desk-scale.
    Paper,
    /// Desk-scale: 32 canvas, 300 videos/class, quarter widths.
    Tiny,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig3Config {
    pub scale: Scale,
    /// Preset names to train.
    pub models: Vec<String>,
    /// Sub-action durations; each yields a fresh dataset of 2d-frame videos.
    pub durations: Vec<usize>,
    pub seeds: Vec<u64>,
    pub canvas: usize,
    pub videos_per_class: usize,
    /// Multiplies each preset's default width.
    pub width_multiplier: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// Seed for dataset generation (training seeds come from `seeds`).
    pub data_seed: u64,
}

impl Fig3Config {
    pub fn preset(scale: Scale) -> Self {
        match scale {
            Scale::Tiny => Fig3Config {
                scale,
                models: vec!["resnet50-3d".into(), "video-bagnet-9".into()],
                durations: vec![16],
                seeds: vec![0, 1, 2],
                canvas: 32,
                videos_per_class: 300,
                width_multiplier: 0.25,
                epochs: 18,
                batch_size: 8,
                lr: 0.01,
                data_seed: 7,
            },
            Scale::Paper => Fig3Config {
                scale,
                models: vec![
                    "resnet50-3d".into(),
                    "video-bagnet-9".into(),
                    "video-bagnet-17".into(),
                    "video-bagnet-33".into(),
                ],
                durations: vec![16, 32, 64],
                seeds: vec![0, 1, 2],
                canvas: 64,
                videos_per_class: 1000,
                width_multiplier: 1.0,
                epochs: 30,
                batch_size: 8,
                lr: 0.01,
                data_seed: 7,
            },
        }
    }
}

/// One (model, duration, seed, split) result, joined with the
/// order-sensitivity ratio of the model at that duration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub model: String,
    pub d: usize,
    pub seed: u64,
    pub split: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_ratio: Option<f64>,
    /// Sub-run failure, recorded instead of aborting the sweep.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Runs the experiment grid. Sub-run failures become error rows and the
/// sweep continues. Artifacts (results.json, results.csv, per-run
/// training directories) land in `out_dir` when given.
pub fn experiment_fig3(
    config: &Fig3Config,
    glyphs: &GlyphSource,
    out_dir: Option<&Path>,
) -> Result<Vec<ExperimentRow>> {
    let mut rows: Vec<ExperimentRow> = Vec::new();
    for &d in &config.durations {
        let dmm = DmmConfig {
            canvas_h: config.canvas,
            canvas_w: config.canvas,
            d,
            videos_per_class: config.videos_per_class,
            master_seed: config.data_seed,
            ..Default::default()
        };
        let splits = generate(&dmm, glyphs)?;
        let train_data = Dataset::from_samples(&splits.train)?;
        let noperm = Dataset::from_samples(&splits.test_noperm)?;
        let perm = Dataset::from_samples(&splits.test_perm)?;

        for model in &config.models {
            let ratio = model_ratio(model, config, d);
            for &seed in &config.seeds {
                let run_id = format!("{model}-d{d}-s{seed}");
                let train_config = TrainConfig {
                    run_id: run_id.clone(),
                    arch: model.clone(),
                    width: Some(scaled_width(model, config.width_multiplier)?),
                    epochs: config.epochs,
                    batch_size: config.batch_size,
                    lr: config.lr,
                    seed,
                    ..Default::default()
                };
                let run_dir = out_dir.map(|d| d.join(&run_id));
                // Resume support: a run dir is only fully populated once
                // training finishes, so a present best.ckpt + results.json
                // pair means the run completed and can be reloaded instead
                // of retrained.
                let completed = run_dir.as_deref().filter(|rd| {
                    rd.join("best.ckpt").exists() && rd.join("results.json").exists()
                });
                let outcome = if let Some(rd) = completed {
                    log::info!("reusing completed run {run_id}");
                    Network::load(&rd.join("best.ckpt")).map(|network| TrainOutcome {
                        network,
                        metrics: Vec::new(),
                        best_epoch: 0,
                        best_val_metric: 0.0,
                    })
                } else {
                    log::info!("starting run {run_id}");
                    train(&train_config, &train_data, &[], run_dir.as_deref())
                };
                match outcome {
                    Ok(mut outcome) => {
                        for (split, data) in [("test_noperm", &noperm), ("test_perm", &perm)] {
                            match evaluate(
                                &mut outcome.network,
                                data,
                                train_config.loss,
                                train_config.n_classes,
                                config.batch_size,
                            ) {
                                Ok((loss, acc)) => rows.push(ExperimentRow {
                                    model: model.clone(),
                                    d,
                                    seed,
                                    split: split.into(),
                                    accuracy: Some(acc),
                                    loss: Some(loss),
                                    window_ratio: ratio,
                                    error: None,
                                }),
                                Err(e) => rows.push(error_row(model, d, seed, split, ratio, e)),
                            }
                        }
                    }
                    Err(e) => {
                        for split in ["test_noperm", "test_perm"] {
                            rows.push(error_row(model, d, seed, split, ratio, &e));
                        }
                    }
                }
            }
        }
    }
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(
            dir.join("results.json"),
            serde_json::to_vec_pretty(&rows).map_err(|e| HarnessError::Config(e.to_string()))?,
        )?;
        std::fs::write(dir.join("results.csv"), rows_csv(&rows))?;
    }
    Ok(rows)
}

fn error_row(
    model: &str,
    d: usize,
    seed: u64,
    split: &str,
    ratio: Option<f64>,
    e: impl std::fmt::Display,
) -> ExperimentRow {
    ExperimentRow {
        model: model.into(),
        d,
        seed,
        split: split.into(),
        accuracy: None,
        loss: None,
        window_ratio: ratio,
        error: Some(e.to_string()),
    }
}

/// Width = preset default x multiplier, so the tiny scale shrinks all
/// models proportionally and keeps their parameter counts comparable.
fn scaled_width(model: &str, multiplier: f64) -> Result<f64> {
    Ok(Preset::from_name(model)?.default_width() * multiplier)
}

fn model_ratio(model: &str, config: &Fig3Config, d: usize) -> Option<f64> {
    let preset = Preset::from_name(model).ok()?;
    let arch = preset
        .build(&PresetConfig {
            width: scaled_width(model, config.width_multiplier).ok(),
            ..Default::default()
        })
        .ok()?;
    window_ratio(&arch, &SegmentLayout::two_equal(d))
        .ok()
        .map(|r| r.ratio)
}

/// results.csv rendering.
pub fn rows_csv(rows: &[ExperimentRow]) -> String {
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    let mut out = String::from("model,d,seed,split,accuracy,loss,window_ratio,error\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.model,
            r.d,
            r.seed,
            r.split,
            opt(r.accuracy),
            opt(r.loss),
            opt(r.window_ratio),
            r.error.clone().unwrap_or_default().replace(',', ";"),
        ));
    }
    out
}
