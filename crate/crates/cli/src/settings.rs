//! Run configuration: built-in defaults, overridden by a config file, then
//! by `RFK_THREADS` (worker count only), then by command-line flags.

use std::path::Path;

use serde::{Deserialize, Serialize};

use rfk_core::extension::{AzimuthMode, AzimuthParams, FixedHeight};
use rfk_core::pipeline::{AhConstants, HeightKind, PreprocessConfig, Variant};
use rfk_core::projection::ProjectionConfig;
use rfk_core::scene::{DatasetStats, SynthConfig};

use crate::error::{as_config, CliError, CliResult};

pub const THREADS_ENV: &str = "RFK_THREADS";

/// Optional keys of a TOML or JSON config file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub height_mode: Option<HeightKind>,
    pub fh_height: Option<f64>,
    pub hmin: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub az_mode: Option<AzimuthMode>,
    pub half_width: Option<u32>,
    pub sigma_deg: Option<f64>,
    pub margin_px: Option<f64>,
    pub resize: Option<String>,
    pub variants: Option<Vec<String>>,
    pub synth: Option<SynthConfig>,
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
        match ext.as_str() {
            "toml" => toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display()))),
            "json" => serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display()))),
            _ => Err(CliError::Config(format!(
                "{}: config files must end in .toml or .json",
                path.display()
            ))),
        }
    }

    pub fn load_opt(path: Option<&Path>) -> CliResult<Self> {
        path.map(Self::load).transpose().map(Option::unwrap_or_default)
    }
}

/// Preprocessing parameters shared by `rasterize` and `metrics`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub height_mode: HeightKind,
    pub fh_height: f64,
    pub ah: AhConstants,
    pub az_mode: AzimuthMode,
    pub half_width: u32,
    pub sigma_deg: f64,
    pub margin_px: f64,
    pub resize: Option<[u32; 2]>,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            height_mode: HeightKind::Ah,
            fh_height: FixedHeight::DEFAULT.meters(),
            ah: AhConstants::default(),
            az_mode: AzimuthMode::Gaussian,
            half_width: AzimuthParams::DEFAULT_HALF_WIDTH,
            sigma_deg: AzimuthParams::DEFAULT_SIGMA_DEG,
            margin_px: 0.0,
            resize: None,
        }
    }
}

/// Values given on the command line; `None` means "not given".
#[derive(Debug, Clone, Default)]
pub struct SettingsOverrides {
    pub height_mode: Option<HeightKind>,
    pub fh_height: Option<f64>,
    pub hmin: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub az_mode: Option<AzimuthMode>,
    pub half_width: Option<u32>,
    pub sigma_deg: Option<f64>,
    pub margin_px: Option<f64>,
    pub resize: Option<String>,
}

pub fn parse_resize(text: &str) -> CliResult<[u32; 2]> {
    let bad = || CliError::Config(format!("resize {text:?} must look like WIDTHxHEIGHT"));
    let (w, h) = text.trim().split_once(['x', 'X']).ok_or_else(bad)?;
    let w: u32 = w.trim().parse().map_err(|_| bad())?;
    let h: u32 = h.trim().parse().map_err(|_| bad())?;
    if w == 0 || h == 0 {
        return Err(bad());
    }
    Ok([w, h])
}

impl Settings {
    pub fn resolve(file: &FileConfig, flags: &SettingsOverrides) -> CliResult<Self> {
        let d = Settings::default();
        let resize = match flags.resize.as_deref().or(file.resize.as_deref()) {
            Some(r) => Some(parse_resize(r)?),
            None => None,
        };
        let s = Settings {
            height_mode: flags.height_mode.or(file.height_mode).unwrap_or(d.height_mode),
            fh_height: flags.fh_height.or(file.fh_height).unwrap_or(d.fh_height),
            ah: AhConstants {
                h_min: flags.hmin.or(file.hmin).unwrap_or(d.ah.h_min),
                alpha: flags.alpha.or(file.alpha).unwrap_or(d.ah.alpha),
                beta: flags.beta.or(file.beta).unwrap_or(d.ah.beta),
            },
            az_mode: flags.az_mode.or(file.az_mode).unwrap_or(d.az_mode),
            half_width: flags.half_width.or(file.half_width).unwrap_or(d.half_width),
            sigma_deg: flags.sigma_deg.or(file.sigma_deg).unwrap_or(d.sigma_deg),
            margin_px: flags.margin_px.or(file.margin_px).unwrap_or(d.margin_px),
            resize,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> CliResult<()> {
        FixedHeight::new(self.fh_height).map_err(as_config)?;
        self.azimuth().map_err(as_config)?;
        if !(self.margin_px.is_finite() && self.margin_px >= 0.0) {
            return Err(CliError::Config(format!("margin {} must be finite and >= 0", self.margin_px)));
        }
        let ah = &self.ah;
        if !(ah.h_min > 0.0 && ah.h_min.is_finite() && ah.alpha.is_finite() && ah.beta.is_finite()) {
            return Err(CliError::Config("hmin must be positive and alpha, beta finite".into()));
        }
        Ok(())
    }

    pub fn variant(&self) -> Variant {
        Variant { height: self.height_mode, azimuth: self.az_mode }
    }

    fn azimuth(&self) -> rfk_core::Result<AzimuthParams> {
        AzimuthParams::new(self.az_mode, self.half_width, self.sigma_deg.to_radians())
    }

    pub fn preprocess_config(&self, variant: Variant, stats: DatasetStats) -> CliResult<PreprocessConfig> {
        let fixed = FixedHeight::new(self.fh_height).map_err(as_config)?;
        let azimuth = self.azimuth().map_err(as_config)?;
        let projection = ProjectionConfig { margin_px: self.margin_px };
        Ok(variant.config(projection, fixed, self.ah, stats, azimuth)?)
    }
}

/// Worker count: flag, then `RFK_THREADS`, then config file. `None` lets the
/// pool pick one worker per core.
pub fn resolve_threads(flag: Option<usize>, env: Option<&str>, file: Option<usize>) -> CliResult<Option<usize>> {
    let env = match env.map(str::trim).filter(|s| !s.is_empty() && flag.is_none()) {
        Some(s) => Some(
            s.parse::<usize>()
                .map_err(|_| CliError::Config(format!("{THREADS_ENV}={s:?} is not a worker count")))?,
        ),
        None => None,
    };
    let threads = flag.or(env).or(file);
    if threads == Some(0) {
        return Err(CliError::Config("worker count must be at least 1".into()));
    }
    Ok(threads)
}

pub fn threads_from_env(flag: Option<usize>, file: Option<usize>) -> CliResult<Option<usize>> {
    let env = std::env::var(THREADS_ENV).ok();
    resolve_threads(flag, env.as_deref(), file)
}

/// Run `f` on a dedicated pool with the requested worker count.
pub fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_beats_env_beats_file() {
        assert_eq!(resolve_threads(Some(2), Some("4"), Some(8)).unwrap(), Some(2));
        assert_eq!(resolve_threads(None, Some("4"), Some(8)).unwrap(), Some(4));
        assert_eq!(resolve_threads(None, None, Some(8)).unwrap(), Some(8));
        assert_eq!(resolve_threads(None, Some(" "), None).unwrap(), None);
        assert!(resolve_threads(None, Some("four"), None).is_err());
        assert_eq!(resolve_threads(Some(3), Some("four"), None).unwrap(), Some(3));
        assert!(resolve_threads(Some(0), None, None).is_err());
    }

    #[test]
    fn flags_override_file_values() {
        let file = FileConfig { alpha: Some(5.0), beta: Some(0.7), ..FileConfig::default() };
        let flags = SettingsOverrides { alpha: Some(4.0), ..SettingsOverrides::default() };
        let s = Settings::resolve(&file, &flags).unwrap();
        assert_eq!(s.ah.alpha, 4.0);
        assert_eq!(s.ah.beta, 0.7);
        assert_eq!(s.ah.h_min, 1.0);
    }

    #[test]
    fn resize_parsing() {
        assert_eq!(parse_resize("320x180").unwrap(), [320, 180]);
        assert!(parse_resize("320").is_err());
        assert!(parse_resize("0x10").is_err());
    }

    #[test]
    fn bad_parameters_are_config_errors() {
        let flags = SettingsOverrides { sigma_deg: Some(-1.0), ..SettingsOverrides::default() };
        let err = Settings::resolve(&FileConfig::default(), &flags).unwrap_err();
        assert_eq!(err.exit_code(), crate::error::EXIT_CONFIG);
    }
}
