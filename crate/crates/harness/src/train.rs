//! Seeded training and evaluation loops.

use crate::data::Dataset;
use crate::error::{HarnessError, Result};
use crate::metrics::accuracy;
use crate::network::Network;
use arch_graph::{propagate, DownsampleAt, Preset, PresetConfig};
use nn_core::loss::{sigmoid_bce, softmax_cross_entropy};
use nn_core::norm::BnMode;
use nn_core::optim::{Adam, Optimizer, Sgd};
use nn_core::Tensor5;
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptKind {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    SoftmaxCe,
    SigmoidBce,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub run_id: String,
    /// Preset name, e.g. "video-bagnet-9".
    pub arch: String,
    /// Channel width override; `None` keeps the preset default.
    pub width: Option<f64>,
    pub downsample_at: Option<DownsampleAt>,
    pub n_classes: usize,
    pub optimizer: OptKind,
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    /// Cosine-decay the learning rate to 0 over the run.
    pub cosine_decay: bool,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub loss: LossKind,
    /// Fraction of the training split held out for validation.
    pub val_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            run_id: "run".into(),
            arch: "video-bagnet-9".into(),
            width: None,
            downsample_at: None,
            n_classes: 3,
            optimizer: OptKind::Sgd,
            lr: 0.01,
            momentum: 0.9,
            weight_decay: 1e-4,
            cosine_decay: true,
            batch_size: 8,
            epochs: 10,
            seed: 0,
            loss: LossKind::SoftmaxCe,
            val_fraction: 0.1,
        }
    }
}

/// One metrics.csv line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub run: String,
    pub epoch: usize,
    pub split: String,
    pub loss: f64,
    /// Accuracy for single-label runs (mAP for multi-label pipelines);
    /// absent on train rows (no eval pass is run on the train split).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metric: Option<f64>,
    pub seconds: f64,
}

pub struct TrainOutcome {
    /// Parameters from the best validation epoch.
    pub network: Network<f32>,
    pub metrics: Vec<MetricsRow>,
    pub best_epoch: usize,
    pub best_val_metric: f64,
}

fn logit_rows(logits: &Tensor5<f32>) -> Vec<Vec<f64>> {
    let (n, k, _, _, _) = logits.dims();
    (0..n)
        .map(|i| (0..k).map(|c| logits.data()[i * k + c] as f64).collect())
        .collect()
}

fn batch_loss(
    net: &mut Network<f32>,
    batch: &Tensor5<f32>,
    labels: &[usize],
    loss: LossKind,
    n_classes: usize,
    train: bool,
) -> Result<(f64, Option<(crate::network::Forward<f32>, Tensor5<f32>)>)> {
    let mode = if train { BnMode::Train } else { BnMode::Eval };
    let fwd = net.forward(batch, mode)?;
    let logits = fwd.outputs.last().expect("non-empty graph");
    let (value, grad) = match loss {
        LossKind::SoftmaxCe => softmax_cross_entropy(logits, labels)?,
        LossKind::SigmoidBce => {
            let (n, k, _, _, _) = logits.dims();
            let mut targets = Tensor5::zeros([n, k, 1, 1, 1]);
            for (i, &l) in labels.iter().enumerate() {
                if l >= n_classes {
                    return Err(HarnessError::Data(format!(
                        "label {l} out of range for {n_classes} classes"
                    )));
                }
                *targets.at_mut(i, l, 0, 0, 0) = 1.0;
            }
            sigmoid_bce(logits, &targets)?
        }
    };
    let value = value as f64;
    if !value.is_finite() {
        return Err(HarnessError::Numerical(format!(
            "non-finite loss {value}"
        )));
    }
    Ok((value, if train { Some((fwd, grad)) } else { None }))
}

/// Eval-mode loss and accuracy over a dataset, batched.
pub fn evaluate(
    net: &mut Network<f32>,
    data: &Dataset,
    loss: LossKind,
    n_classes: usize,
    batch_size: usize,
) -> Result<(f64, f64)> {
    if data.is_empty() {
        return Err(HarnessError::Data("cannot evaluate an empty split".into()));
    }
    if let Some(&l) = data.labels.iter().find(|&&l| l >= n_classes) {
        return Err(HarnessError::Data(format!(
            "label {l} out of range for {n_classes} classes"
        )));
    }
    let indices: Vec<usize> = (0..data.len()).collect();
    let mut total_loss = 0.0;
    let mut rows = Vec::with_capacity(data.len());
    let mut labels_all = Vec::with_capacity(data.len());
    for chunk in indices.chunks(batch_size.max(1)) {
        let (batch, labels) = data.batch::<f32>(chunk)?;
        let fwd = net.forward(&batch, BnMode::Eval)?;
        let logits = fwd.outputs.last().unwrap();
        let (l, _) = match loss {
            LossKind::SoftmaxCe => softmax_cross_entropy(logits, &labels)?,
            LossKind::SigmoidBce => {
                let (n, k, _, _, _) = logits.dims();
                let mut targets = Tensor5::zeros([n, k, 1, 1, 1]);
                for (i, &l) in labels.iter().enumerate() {
                    *targets.at_mut(i, l, 0, 0, 0) = 1.0;
                }
                sigmoid_bce(logits, &targets)?
            }
        };
        if !(l as f64).is_finite() {
            return Err(HarnessError::Numerical(format!("non-finite eval loss {l}")));
        }
        total_loss += l as f64 * chunk.len() as f64;
        rows.extend(logit_rows(logits));
        labels_all.extend(labels);
    }
    let acc = accuracy(&rows, &labels_all)?;
    Ok((total_loss / data.len() as f64, acc))
}

/// Builds the configured architecture and checks it against the data
/// before any training step runs.
pub fn build_network(config: &TrainConfig, data: &Dataset) -> Result<Network<f32>> {
    let preset = Preset::from_name(&config.arch)?;
    let arch = preset.build(&PresetConfig {
        width: config.width,
        n_classes: config.n_classes,
        in_channels: 1,
        downsample_at: config.downsample_at,
    })?;
    // shape/channel mismatch surfaces here, not mid-epoch
    propagate(&arch, data.t, data.h, data.w)?;
    if let Some(&l) = data.labels.iter().find(|&&l| l >= config.n_classes) {
        return Err(HarnessError::Config(format!(
            "dataset label {l} out of range for {} classes",
            config.n_classes
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    Network::init(&arch, &mut rng)
}

/// Full training run. `eval_sets` are evaluated every epoch; the model
/// from the best validation epoch is returned (and written to
/// `best.ckpt` when `out_dir` is given, along with config.json,
/// metrics.csv and results.json).
pub fn train(
    config: &TrainConfig,
    train_data: &Dataset,
    eval_sets: &[(&str, &Dataset)],
    out_dir: Option<&Path>,
) -> Result<TrainOutcome> {
    if config.batch_size == 0 || config.epochs == 0 {
        return Err(HarnessError::Config("batch_size and epochs must be >= 1".into()));
    }
    if !(0.0..1.0).contains(&config.val_fraction) {
        return Err(HarnessError::Config(format!(
            "val_fraction {} not in [0, 1)",
            config.val_fraction
        )));
    }
    let mut net = build_network(config, train_data)?;

    // seeded validation holdout
    let mut split_rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x5eed));
    let mut order: Vec<usize> = (0..train_data.len()).collect();
    order.shuffle(&mut split_rng);
    let n_val = ((train_data.len() as f64) * config.val_fraction).round() as usize;
    let (val_idx, train_idx) = order.split_at(n_val);
    let val_data = (!val_idx.is_empty()).then(|| subset(train_data, val_idx));

    let mut optimizer: Optimizer<f32> = match config.optimizer {
        OptKind::Sgd => Optimizer::Sgd(Sgd::new(
            config.lr as f32,
            config.momentum as f32,
            config.weight_decay as f32,
        )),
        OptKind::Adam => Optimizer::Adam(Adam::new(config.lr as f32, config.weight_decay as f32)),
    };

    let started = Instant::now();
    let mut metrics: Vec<MetricsRow> = Vec::new();
    let mut best: Option<(usize, f64, Network<f32>)> = None;

    for epoch in 0..config.epochs {
        let lr = if config.cosine_decay {
            config.lr * 0.5 * (1.0 + (std::f64::consts::PI * epoch as f64 / config.epochs as f64).cos())
        } else {
            config.lr
        };
        optimizer.set_lr(lr as f32);

        let mut epoch_rng =
            ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1 + epoch as u64));
        let mut idx = train_idx.to_vec();
        idx.shuffle(&mut epoch_rng);

        let mut epoch_loss = 0.0;
        for chunk in idx.chunks(config.batch_size) {
            let (batch, labels) = train_data.batch::<f32>(chunk)?;
            let (value, cache) =
                batch_loss(&mut net, &batch, &labels, config.loss, config.n_classes, true)?;
            let (fwd, grad) = cache.expect("train mode returns caches");
            let grads = net.backward(&batch, &fwd, grad)?;
            let mut pairs = net.param_grad_pairs(&grads);
            optimizer.step(&mut pairs)?;
            epoch_loss += value * chunk.len() as f64;
        }
        epoch_loss /= idx.len().max(1) as f64;

        let row = |split: &str, loss: f64, metric: Option<f64>, metrics: &mut Vec<MetricsRow>| {
            metrics.push(MetricsRow {
                run: config.run_id.clone(),
                epoch,
                split: split.to_string(),
                loss,
                metric,
                seconds: started.elapsed().as_secs_f64(),
            });
        };
        row("train", epoch_loss, None, &mut metrics);

        let val_metric = match &val_data {
            Some(v) => {
                let (l, acc) = evaluate(&mut net, v, config.loss, config.n_classes, config.batch_size)?;
                row("val", l, Some(acc), &mut metrics);
                acc
            }
            // no holdout: fall back to selecting on training loss
            None => -epoch_loss,
        };
        for (name, set) in eval_sets {
            let (l, acc) = evaluate(&mut net, set, config.loss, config.n_classes, config.batch_size)?;
            row(name, l, Some(acc), &mut metrics);
        }

        let improved = best.as_ref().map_or(true, |(_, m, _)| val_metric > *m);
        if improved {
            best = Some((epoch, val_metric, net.clone()));
        }
        log::info!(
            "{}: epoch {}/{} train loss {:.4}, selection metric {:.4}{}",
            config.run_id,
            epoch + 1,
            config.epochs,
            epoch_loss,
            val_metric,
            if improved { " (new best)" } else { "" }
        );
    }

    let (best_epoch, best_val_metric, best_net) = best.expect("epochs >= 1");
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(
            dir.join("config.json"),
            serde_json::to_vec_pretty(config).map_err(|e| HarnessError::Config(e.to_string()))?,
        )?;
        std::fs::write(dir.join("metrics.csv"), metrics_csv(&metrics))?;
        best_net.save(&dir.join("best.ckpt"))?;
        let results = serde_json::json!({
            "run": config.run_id,
            "best_epoch": best_epoch,
            "best_val_metric": best_val_metric,
            "rows": metrics,
        });
        std::fs::write(
            dir.join("results.json"),
            serde_json::to_vec_pretty(&results).map_err(|e| HarnessError::Config(e.to_string()))?,
        )?;
    }
    Ok(TrainOutcome {
        network: best_net,
        metrics,
        best_epoch,
        best_val_metric,
    })
}

/// metrics.csv rendering (header: run,epoch,split,loss,metric,seconds).
pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from("run,epoch,split,loss,metric,seconds\n");
    for r in rows {
        let metric = r.metric.map_or(String::new(), |m| m.to_string());
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.run, r.epoch, r.split, r.loss, metric, r.seconds
        ));
    }
    out
}

fn subset(data: &Dataset, indices: &[usize]) -> Dataset {
    Dataset {
        videos: indices.iter().map(|&i| data.videos[i].clone()).collect(),
        labels: indices.iter().map(|&i| data.labels[i]).collect(),
        t: data.t,
        h: data.h,
        w: data.w,
    }
}
