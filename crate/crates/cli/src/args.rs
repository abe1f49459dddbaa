use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rfk_core::extension::AzimuthMode;
use rfk_core::pipeline::HeightKind;

use crate::settings::SettingsOverrides;

#[derive(Debug, Parser)]
#[command(name = "rfk", version, about = "Radar-camera alignment and fusion-kernel toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic scene set.
    Synth(SynthArgs),
    /// Preprocess every frame and write one radar raster per frame plus a manifest.
    Rasterize(RasterizeArgs),
    /// Score preprocessing variants against the annotations.
    Metrics(MetricsArgs),
    /// Run a fusion block on two feature-map fixtures.
    FuseCheck(FuseCheckArgs),
    /// Merge metrics reports into one long-format CSV.
    Report(ReportArgs),
    /// Convert a nuScenes-style export into a scene set (best effort).
    Convert(ConvertArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HeightModeArg {
    Fh,
    Ah,
}

impl From<HeightModeArg> for HeightKind {
    fn from(h: HeightModeArg) -> Self {
        match h {
            HeightModeArg::Fh => HeightKind::Fh,
            HeightModeArg::Ah => HeightKind::Ah,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AzModeArg {
    None,
    Ae,
    Aue,
}

impl From<AzModeArg> for AzimuthMode {
    fn from(a: AzModeArg) -> Self {
        match a {
            AzModeArg::None => AzimuthMode::None,
            AzModeArg::Ae => AzimuthMode::Uniform,
            AzModeArg::Aue => AzimuthMode::Gaussian,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML or JSON config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads (overrides RFK_THREADS and the config file).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct PreprocessArgs {
    #[arg(long, value_enum)]
    pub height_mode: Option<HeightModeArg>,
    /// Fixed extension height, meters.
    #[arg(long, allow_hyphen_values = true)]
    pub fh_height: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub hmin: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    #[arg(long, value_enum)]
    pub az_mode: Option<AzModeArg>,
    /// Columns added on each side of a projected point.
    #[arg(long)]
    pub half_width: Option<u32>,
    /// Azimuth accuracy, degrees.
    #[arg(long, allow_hyphen_values = true)]
    pub sigma_deg: Option<f64>,
    /// Out-of-frame margin in pixels within which points are kept.
    #[arg(long, allow_hyphen_values = true)]
    pub margin: Option<f64>,
    /// Resample frames to WIDTHxHEIGHT before projecting.
    #[arg(long)]
    pub resize: Option<String>,
}

impl PreprocessArgs {
    pub fn overrides(&self) -> SettingsOverrides {
        SettingsOverrides {
            height_mode: self.height_mode.map(Into::into),
            fh_height: self.fh_height,
            hmin: self.hmin,
            alpha: self.alpha,
            beta: self.beta,
            az_mode: self.az_mode.map(Into::into),
            half_width: self.half_width,
            sigma_deg: self.sigma_deg,
            margin_px: self.margin,
            resize: self.resize.clone(),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Output scene-set JSON.
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub frames: Option<usize>,
    /// RCS-height correlation of generated objects.
    #[arg(long)]
    pub correlation: Option<f64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RasterizeArgs {
    /// Input scene-set JSON.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Output directory.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Also export each channel as a 16-bit PNG.
    #[arg(long)]
    pub png: bool,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub preprocess: PreprocessArgs,
}

#[derive(Debug, Clone, Args)]
pub struct MetricsArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    /// Comma-separated variants, e.g. fh,ah,ah+ae,ah+aue.
    #[arg(long, value_delimiter = ',')]
    pub variants: Option<Vec<String>>,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub preprocess: PreprocessArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Block {
    Swfb,
    Safb,
    Add,
    Mul,
    Concat,
}

#[derive(Debug, Clone, Args)]
pub struct FuseCheckArgs {
    /// Image feature map (FMAP).
    #[arg(long)]
    pub img: PathBuf,
    /// Radar feature map (FMAP).
    #[arg(long)]
    pub rad: PathBuf,
    /// Parameter JSON; omitted means identity parameters.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub block: Option<Block>,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// metrics.json files written by `rfk metrics`.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ConvertArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    /// Skip reloading the written file (images are not opened).
    #[arg(long)]
    pub no_check: bool,
}
