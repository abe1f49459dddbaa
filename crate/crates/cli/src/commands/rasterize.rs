use std::borrow::Cow;

use rayon::prelude::*;
use serde::Serialize;

use rfk_core::pipeline::{preprocess_frame, PreprocessConfig, Preprocessed};
use rfk_core::raster::{export_channel_png, resize_frame, Channel, RadarRaster};
use rfk_core::scene::{load_scene_set, DatasetStats, Frame, SceneSet};

use super::{create_dir, sha256_hex, stats_for, stats_or_unit, write_bytes, write_json};
use crate::args::RasterizeArgs;
use crate::error::CliResult;
use crate::settings::{threads_from_env, with_pool, FileConfig, Settings};

pub(crate) fn prepare_frame<'a>(frame: &'a Frame, settings: &Settings) -> rfk_core::Result<Cow<'a, Frame>> {
    match settings.resize {
        Some([w, h]) => resize_frame(frame, w, h).map(Cow::Owned),
        None => Ok(Cow::Borrowed(frame)),
    }
}

/// Preprocess every frame of `scenes`; results come back in frame order
/// regardless of the worker count.
pub fn preprocess_scenes(
    scenes: &SceneSet,
    settings: &Settings,
    config: &PreprocessConfig,
    threads: Option<usize>,
) -> CliResult<Vec<Preprocessed>> {
    let out = with_pool(threads, || {
        scenes
            .frames
            .par_iter()
            .enumerate()
            .map(|(i, frame)| {
                let frame = prepare_frame(frame, settings).map_err(|e| e.in_frame(i))?;
                preprocess_frame(&frame, config).map_err(|e| e.in_frame(i))
            })
            .collect::<rfk_core::Result<Vec<_>>>()
    })??;
    Ok(out)
}

pub fn rasterize_scenes(scenes: &SceneSet, settings: &Settings, threads: Option<usize>) -> CliResult<Vec<RadarRaster>> {
    let variant = settings.variant();
    let stats = stats_or_unit(stats_for(scenes, &[variant])?);
    let config = settings.preprocess_config(variant, stats)?;
    Ok(preprocess_scenes(scenes, settings, &config, threads)?
        .into_iter()
        .map(|p| p.raster)
        .collect())
}

#[derive(Debug, Serialize)]
struct ManifestEntry<'a> {
    index: usize,
    id: &'a str,
    file: String,
    sha256: String,
    width: u32,
    height: u32,
    occupied: usize,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    variant: String,
    settings: &'a Settings,
    stats: Option<DatasetStats>,
    frames: Vec<ManifestEntry<'a>>,
}

pub fn run(args: &RasterizeArgs) -> CliResult<String> {
    let file = FileConfig::load_opt(args.common.config.as_deref())?;
    let settings = Settings::resolve(&file, &args.preprocess.overrides())?;
    let threads = threads_from_env(args.common.threads, file.threads)?;
    let scenes = load_scene_set(&args.input)?;
    let stats = stats_for(&scenes, &[settings.variant()])?;
    let rasters = rasterize_scenes(&scenes, &settings, threads)?;

    create_dir(&args.out)?;
    let mut entries = Vec::with_capacity(rasters.len());
    for (index, (frame, raster)) in scenes.frames.iter().zip(&rasters).enumerate() {
        let name = format!("{index:05}.rras");
        let bytes = raster.to_bytes();
        write_bytes(&args.out.join(&name), &bytes)?;
        if args.png {
            for c in Channel::ALL {
                export_channel_png(raster, c, args.out.join(format!("{index:05}-{}.png", c.name())))?;
            }
        }
        entries.push(ManifestEntry {
            index,
            id: &frame.id,
            file: name,
            sha256: sha256_hex(&bytes),
            width: raster.width(),
            height: raster.height(),
            occupied: raster.occupied_count(),
        });
    }
    let manifest = Manifest {
        variant: settings.variant().to_string(),
        settings: &settings,
        stats,
        frames: entries,
    };
    write_json(&args.out.join("manifest.json"), &manifest)?;
    Ok(format!("wrote {} rasters ({}) to {}", rasters.len(), manifest.variant, args.out.display()))
}
