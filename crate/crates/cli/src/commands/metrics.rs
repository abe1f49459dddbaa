use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use rfk_core::metrics::{aggregate, Aggregate, DistributionSummary, FrameMetrics};
use rfk_core::pipeline::{evaluate_frame, Variant};
use rfk_core::scene::{load_scene_set, DatasetStats, SceneSet};

use super::rasterize::prepare_frame;
use super::{create_dir, csv_error, stats_for, stats_or_unit, write_json};
use crate::args::MetricsArgs;
use crate::error::{as_config, CliError, CliResult};
use crate::settings::{threads_from_env, with_pool, FileConfig, Settings};

pub const DEFAULT_VARIANTS: [Variant; 4] = [Variant::FH, Variant::AH, Variant::AH_AE, Variant::AH_AUE];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantReport {
    pub variant: String,
    pub summary: Aggregate,
    pub frames: Vec<FrameMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub settings: Settings,
    pub stats: Option<DatasetStats>,
    pub variants: Vec<VariantReport>,
}

pub fn parse_variants(names: &[String]) -> CliResult<Vec<Variant>> {
    let mut out: Vec<Variant> = Vec::with_capacity(names.len());
    for n in names.iter().filter(|n| !n.trim().is_empty()) {
        let v: Variant = n.parse().map_err(as_config)?;
        if out.contains(&v) {
            return Err(CliError::Config(format!("variant {v} listed twice")));
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(CliError::Config("no variants given".into()));
    }
    Ok(out)
}

pub fn evaluate_variants(
    scenes: &SceneSet,
    settings: &Settings,
    variants: &[Variant],
    threads: Option<usize>,
) -> CliResult<MetricsReport> {
    let stats = stats_for(scenes, variants)?;
    let mut reports = Vec::with_capacity(variants.len());
    for &variant in variants {
        let config = settings.preprocess_config(variant, stats_or_unit(stats))?;
        let frames = with_pool(threads, || {
            scenes
                .frames
                .par_iter()
                .enumerate()
                .map(|(i, frame)| {
                    let frame = prepare_frame(frame, settings).map_err(|e| e.in_frame(i))?;
                    evaluate_frame(&frame, &config).map(|(_, m)| m).map_err(|e| e.in_frame(i))
                })
                .collect::<rfk_core::Result<Vec<_>>>()
        })??;
        reports.push(VariantReport {
            variant: variant.to_string(),
            summary: aggregate(&frames),
            frames,
        });
    }
    Ok(MetricsReport { settings: *settings, stats, variants: reports })
}

fn write_frames_csv(path: &Path, report: &MetricsReport) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = [
        "variant", "frame_id", "tag", "n_t", "n_in", "mse", "mse_empty", "height_error", "height_empty", "detections",
    ];
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for v in &report.variants {
        for f in &v.frames {
            w.write_record([
                v.variant.clone(),
                f.frame_id.clone(),
                f.tag.to_string(),
                f.n_t.to_string(),
                f.n_in.to_string(),
                f.mse.to_string(),
                f.mse_empty.to_string(),
                f.height_error.to_string(),
                f.height_empty.to_string(),
                f.detections.to_string(),
            ])
            .map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn summary_cells(s: Option<&DistributionSummary>) -> Vec<String> {
    match s {
        Some(s) => vec![
            s.mean.to_string(),
            s.q1.to_string(),
            s.median.to_string(),
            s.q3.to_string(),
            s.count.to_string(),
        ],
        None => vec![String::new(); 5],
    }
}

fn write_summary_csv(path: &Path, report: &MetricsReport) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["variant", "group", "metric", "frames", "empty_frames", "mean", "q1", "median", "q3", "count"])
        .map_err(|e| csv_error(path, e))?;
    for v in &report.variants {
        let groups = std::iter::once(("all".to_string(), &v.summary.overall))
            .chain(v.summary.by_tag.iter().map(|(t, g)| (t.to_string(), g)));
        for (name, g) in groups {
            for (metric, empty, summary) in [
                ("mse", g.empty_mse_frames, g.mse.as_ref()),
                ("height_error", g.empty_height_frames, g.height_error.as_ref()),
            ] {
                let mut row = vec![v.variant.clone(), name.clone(), metric.to_string(), g.frames.to_string(), empty.to_string()];
                row.extend(summary_cells(summary));
                w.write_record(&row).map_err(|e| csv_error(path, e))?;
            }
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn run(args: &MetricsArgs) -> CliResult<String> {
    let file = FileConfig::load_opt(args.common.config.as_deref())?;
    let settings = Settings::resolve(&file, &args.preprocess.overrides())?;
    let threads = threads_from_env(args.common.threads, file.threads)?;
    let variants = match args.variants.as_ref().or(file.variants.as_ref()) {
        Some(names) => parse_variants(names)?,
        None => DEFAULT_VARIANTS.to_vec(),
    };
    let scenes = load_scene_set(&args.input)?;
    let report = evaluate_variants(&scenes, &settings, &variants, threads)?;

    create_dir(&args.out)?;
    write_json(&args.out.join("metrics.json"), &report)?;
    write_frames_csv(&args.out.join("frames.csv"), &report)?;
    write_summary_csv(&args.out.join("summary.csv"), &report)?;
    let lines: Vec<String> = report
        .variants
        .iter()
        .map(|v| {
            let mean = |s: Option<&DistributionSummary>| s.map_or("n/a".to_string(), |s| format!("{:.4}", s.mean));
            format!(
                "{:<8} mean mse {}  mean dh {}",
                v.variant,
                mean(v.summary.overall.mse.as_ref()),
                mean(v.summary.overall.height_error.as_ref())
            )
        })
        .collect();
    Ok(format!("{}\nwrote metrics for {} frames to {}", lines.join("\n"), scenes.frames.len(), args.out.display()))
}
