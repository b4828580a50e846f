//! Subcommand implementations: each resolves flags into library calls
//! and renders the result via [`crate::output`].

use crate::output::{self, KeyValues, Table};
use crate::{ArchArgs, CliError, CliResult, Command, ExperimentCommand, Format};
use arch_graph::{
    param_count, propagate, rf_calculus, ArchGraph, ArchSpec, DownsampleAt, LayerKind, Preset,
    PresetConfig,
};
use dmm_data::{generate, read_container, write_container, DmmConfig, GlyphSource};
use harness::{evaluate, train, Dataset, LossKind, Network, TrainConfig};
use order_sensitivity::{window_ratio, SegmentLayout};
use std::path::Path;

pub fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::GenData {
            out,
            canvas,
            d,
            videos_per_class,
            perm_prob,
            seed,
            mnist_train,
            mnist_test,
        } => gen_data(
            &out,
            canvas,
            d,
            videos_per_class,
            perm_prob,
            seed,
            mnist_train.as_deref(),
            mnist_test.as_deref(),
        ),
        Command::RfReport {
            arch,
            input_frames,
            spatial,
            format,
        } => rf_report(&arch, input_frames, spatial, format),
        Command::ParamCount { arch, format } => param_count_cmd(&arch, format),
        Command::Sensitivity {
            arch,
            video_len,
            segment_len,
            format,
        } => sensitivity(&arch, video_len, segment_len, format),
        Command::Train {
            arch,
            data,
            out,
            epochs,
            batch_size,
            lr,
            seed,
            loss,
            val_fraction,
        } => train_cmd(
            &arch,
            &data,
            &out,
            epochs,
            batch_size,
            lr,
            seed,
            &loss,
            val_fraction,
        ),
        Command::Eval {
            checkpoint,
            data,
            batch_size,
            format,
        } => eval_cmd(&checkpoint, &data, batch_size, format),
        Command::Experiment { which } => match which {
            ExperimentCommand::Fig3 {
                scale,
                out,
                mnist_train,
                mnist_test,
                format,
            } => fig3(
                &scale,
                &out,
                mnist_train.as_deref(),
                mnist_test.as_deref(),
                format,
            ),
        },
    }
}

/// Resolves `--arch`/`--arch-file` plus the preset flags into a name
/// and a built graph.
fn build_arch(args: &ArchArgs) -> CliResult<(String, ArchGraph)> {
    if let Some(path) = &args.arch_file {
        let spec = ArchSpec::from_json(&std::fs::read_to_string(path)?)?;
        return Ok((spec.name(), spec.build()?));
    }
    let (preset, arch) = build_preset(args)?;
    Ok((preset.name(), arch))
}

/// As [`build_arch`], but restricted to presets (training configs
/// record a preset name).
fn build_preset(args: &ArchArgs) -> CliResult<(Preset, ArchGraph)> {
    let name = args
        .arch
        .as_deref()
        .ok_or_else(|| CliError::usage("one of --arch or --arch-file is required"))?;
    let preset = Preset::from_name(name)?;
    let width_multiplier = args.width_multiplier.unwrap_or(1.0);
    if !(width_multiplier.is_finite() && width_multiplier > 0.0) {
        return Err(CliError::data(format!(
            "--width-multiplier must be a positive number, got {width_multiplier}"
        )));
    }
    let downsample_at = match args.downsample_at.as_deref() {
        None => None,
        Some(s) => Some(match s.replace('_', "-").as_str() {
            "bottleneck-entry" => DownsampleAt::BottleneckEntry,
            "mid-conv" => DownsampleAt::MidConv,
            other => {
                return Err(CliError::data(format!(
                    "unknown --downsample-at '{other}' (expected bottleneck-entry or mid-conv)"
                )))
            }
        }),
    };
    let arch = preset.build(&PresetConfig {
        width: Some(preset.default_width() * width_multiplier),
        n_classes: args.classes.unwrap_or(3),
        downsample_at,
        ..Default::default()
    })?;
    Ok((preset, arch))
}

fn load_glyphs(mnist_train: Option<&Path>, mnist_test: Option<&Path>) -> CliResult<GlyphSource> {
    match (mnist_train, mnist_test) {
        (Some(train), Some(test)) => {
            log::info!("loading MNIST glyphs from {} / {}", train.display(), test.display());
            Ok(GlyphSource::from_idx_bytes(
                &std::fs::read(train)?,
                &std::fs::read(test)?,
            )?)
        }
        _ => {
            log::info!("no MNIST files given; using procedural glyphs");
            Ok(GlyphSource::procedural())
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn gen_data(
    out: &Path,
    canvas: usize,
    d: usize,
    videos_per_class: usize,
    perm_prob: f64,
    seed: u64,
    mnist_train: Option<&Path>,
    mnist_test: Option<&Path>,
) -> CliResult<()> {
    let config = DmmConfig {
        canvas_h: canvas,
        canvas_w: canvas,
        d,
        videos_per_class,
        permutation_probability: perm_prob,
        master_seed: seed,
        ..Default::default()
    };
    let glyphs = load_glyphs(mnist_train, mnist_test)?;
    let splits = generate(&config, &glyphs)?;
    for (name, videos) in [
        ("train", &splits.train),
        ("test_noperm", &splits.test_noperm),
        ("test_perm", &splits.test_perm),
    ] {
        let dir = out.join(name);
        write_container(&dir, &config, videos)?;
        println!("{}: {} videos", dir.display(), videos.len());
    }
    Ok(())
}

fn rf_report(args: &ArchArgs, input_frames: usize, spatial: usize, format: Format) -> CliResult<()> {
    let (name, arch) = build_arch(args)?;
    let geometry = propagate(&arch, input_frames, spatial, spatial)?;
    let last_conv = rf_calculus(&arch, input_frames, spatial, spatial)?;
    let mut table = Table::new(&["node", "channels", "t", "h", "w", "rf_t", "jump_t", "offset_t"],
    );
    for (node, g) in arch.nodes.iter().zip(&geometry) {
        table.row(&[
            node.name.clone(),
            g.channels.to_string(),
            g.t.to_string(),
            g.h.to_string(),
            g.w.to_string(),
            g.rf_t.to_string(),
            g.jump_t.to_string(),
            g.offset_t.to_string(),
        ]);
    }
    let summary = serde_json::json!({
        "arch": name,
        "input_frames": input_frames,
        "spatial": spatial,
        "last_conv": last_conv,
    });
    output::emit_table(format, &table, Some(summary))
}

fn param_count_cmd(args: &ArchArgs, format: Format) -> CliResult<()> {
    let (name, arch) = build_arch(args)?;
    let params = param_count(&arch);
    let classes = arch
        .nodes
        .iter()
        .find_map(|n| match n.kind {
            LayerKind::Fc { out_features, .. } => Some(out_features),
            _ => None,
        })
        .unwrap_or(0);
    let kv = KeyValues::new()
        .push("arch", name)
        .push("classes", classes)
        .push("params", params)
        .push("millions", format!("{:.2}", params as f64 / 1e6));
    output::emit_key_values(format, &kv)
}

fn sensitivity(args: &ArchArgs, video_len: usize, segment_len: usize, format: Format) -> CliResult<()> {
    if segment_len == 0 || segment_len >= video_len {
        return Err(CliError::data(format!(
            "--segment-len {segment_len} must split --video-len {video_len} into two non-empty segments"
        )));
    }
    let (name, arch) = build_arch(args)?;
    let layout = SegmentLayout {
        total_len: video_len,
        segments: vec![(0, segment_len), (segment_len, video_len)],
    };
    let report = window_ratio(&arch, &layout)?;
    let kv = KeyValues::new()
        .push("arch", name)
        .push("video_len", video_len)
        .push("segment_len", segment_len)
        .push("single_windows", report.single_window_count)
        .push("total_windows", report.total_window_count)
        .push("ratio", report.ratio);
    output::emit_key_values(format, &kv)
}

fn load_dataset(dir: &Path) -> CliResult<Dataset> {
    let (_, videos) = read_container(dir)?;
    Ok(Dataset::from_samples(&videos)?)
}

fn parse_loss(name: &str) -> CliResult<LossKind> {
    match name.replace('_', "-").as_str() {
        "softmax-ce" => Ok(LossKind::SoftmaxCe),
        "sigmoid-bce" => Ok(LossKind::SigmoidBce),
        other => Err(CliError::data(format!(
            "unknown --loss '{other}' (expected softmax-ce or sigmoid-bce)"
        ))),
    }
}

#[allow(clippy::too_many_arguments)]
fn train_cmd(
    args: &ArchArgs,
    data: &Path,
    out: &Path,
    epochs: usize,
    batch_size: usize,
    lr: f64,
    seed: u64,
    loss: &str,
    val_fraction: f64,
) -> CliResult<()> {
    let (preset, _) = build_preset(args)?;
    let dataset = load_dataset(data)?;
    let config = TrainConfig {
        run_id: out
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "run".into()),
        arch: preset.name(),
        width: Some(preset.default_width() * args.width_multiplier.unwrap_or(1.0)),
        n_classes: args.classes.unwrap_or(3),
        epochs,
        batch_size,
        lr,
        seed,
        loss: parse_loss(loss)?,
        val_fraction,
        ..Default::default()
    };
    let outcome = train(&config, &dataset, &[], Some(out))?;
    println!(
        "best epoch {} (val metric {:.4}); artifacts in {}",
        outcome.best_epoch,
        outcome.best_val_metric,
        out.display()
    );
    Ok(())
}

fn eval_cmd(checkpoint: &Path, data: &Path, batch_size: usize, format: Format) -> CliResult<()> {
    let mut net: Network<f32> = Network::load(checkpoint)?;
    let dataset = load_dataset(data)?;
    let n_classes = net
        .arch
        .nodes
        .iter()
        .find_map(|n| match n.kind {
            arch_graph::LayerKind::Fc { out_features, .. } => Some(out_features),
            _ => None,
        })
        .ok_or_else(|| CliError::data("checkpoint architecture has no classifier head"))?;
    let (loss, acc) = evaluate(&mut net, &dataset, LossKind::SoftmaxCe, n_classes, batch_size)?;
    let kv = KeyValues::new()
        .push("checkpoint", checkpoint.display())
        .push("data", data.display())
        .push("samples", dataset.len())
        .push("loss", loss)
        .push("accuracy", acc);
    output::emit_key_values(format, &kv)
}

fn fig3(
    scale: &str,
    out: &Path,
    mnist_train: Option<&Path>,
    mnist_test: Option<&Path>,
    format: Format,
) -> CliResult<()> {
    let scale = match scale {
        "tiny" => harness::Scale::Tiny,
        "paper" => harness::Scale::Paper,
        other => {
            return Err(CliError::data(format!(
                "unknown --scale '{other}' (expected tiny or paper)"
            )))
        }
    };
    let config = harness::Fig3Config::preset(scale);
    let glyphs = load_glyphs(mnist_train, mnist_test)?;
    let rows = harness::experiment_fig3(&config, &glyphs, Some(out))?;
    let mut table = Table::new(&["model", "d", "seed", "split", "accuracy", "loss", "window_ratio", "error"],
    );
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
    for r in &rows {
        table.row(&[
            r.model.clone(),
            r.d.to_string(),
            r.seed.to_string(),
            r.split.clone(),
            opt(r.accuracy),
            opt(r.loss),
            opt(r.window_ratio),
            r.error.clone().unwrap_or_default(),
        ]);
    }
    let summary = serde_json::json!({ "rows": rows, "out": out.display().to_string() });
    output::emit_table(format, &table, Some(summary))
}
