use rfk_core::scene::{generate_synthetic, write_scene_set};

use crate::args::SynthArgs;
use crate::error::{as_config, CliResult};
use crate::settings::FileConfig;

pub const DEFAULT_SEED: u64 = 42;

pub fn run(args: &SynthArgs) -> CliResult<String> {
    let file = FileConfig::load_opt(args.config.as_deref())?;
    let mut cfg = file.synth.unwrap_or_default();
    if let Some(n) = args.frames {
        cfg.frames = n;
    }
    if let Some(rho) = args.correlation {
        cfg.rcs_height_correlation = rho;
    }
    cfg.validate().map_err(as_config)?;
    let seed = args.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let scenes = generate_synthetic(seed, &cfg)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        super::create_dir(dir)?;
    }
    write_scene_set(&scenes, &args.out)?;
    Ok(format!(
        "wrote {} frames ({} radar points) to {}",
        scenes.frames.len(),
        scenes.point_count(),
        args.out.display()
    ))
}
