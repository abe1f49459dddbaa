//! Per-frame preprocessing: project, extend, rasterize.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extension::{extend, AhParams, AzimuthMode, AzimuthParams, ExtendedDetection, FixedHeight, HeightStrategy};
use crate::projection::{project_frame, ProjectionConfig};
use crate::metrics::{height_error, projection_mse, FrameMetrics};
use crate::raster::{rasterize, RadarRaster};
use crate::scene::{DatasetStats, Frame};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub projection: ProjectionConfig,
    pub height: HeightStrategy,
    pub azimuth: AzimuthParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preprocessed {
    pub detections: Vec<ExtendedDetection>,
    pub raster: RadarRaster,
}

pub fn extend_frame(frame: &Frame, config: &PreprocessConfig) -> Result<Vec<ExtendedDetection>> {
    project_frame(frame, &config.projection)
        .iter()
        .map(|p| {
            extend(
                p,
                &frame.radar_points[p.source_index],
                &config.height,
                &config.azimuth,
                &frame.calibration,
            )
        })
        .collect()
}

pub fn preprocess_frame(frame: &Frame, config: &PreprocessConfig) -> Result<Preprocessed> {
    let detections = extend_frame(frame, config)?;
    let raster = rasterize(frame, &detections);
    Ok(Preprocessed { detections, raster })
}

/// Preprocess one frame and score it against its annotations.
pub fn evaluate_frame(frame: &Frame, config: &PreprocessConfig) -> Result<(Preprocessed, FrameMetrics)> {
    let pre = preprocess_frame(frame, config)?;
    let mse = projection_mse(frame.id.clone(), &pre.raster, &frame.boxes);
    let dh = height_error(frame, &pre.detections)?;
    let metrics = FrameMetrics::new(frame, &mse, &dh);
    Ok((pre, metrics))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeightKind {
    Fh,
    Ah,
}

/// A preprocessing variant such as `fh`, `ah`, `ah+ae` or `ah+aue`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Variant {
    pub height: HeightKind,
    pub azimuth: AzimuthMode,
}

impl Variant {
    pub const FH: Variant = Variant { height: HeightKind::Fh, azimuth: AzimuthMode::None };
    pub const AH: Variant = Variant { height: HeightKind::Ah, azimuth: AzimuthMode::None };
    pub const AH_AE: Variant = Variant { height: HeightKind::Ah, azimuth: AzimuthMode::Uniform };
    pub const AH_AUE: Variant = Variant { height: HeightKind::Ah, azimuth: AzimuthMode::Gaussian };

    /// Build the concrete configuration from shared parameters.
    pub fn config(
        &self,
        projection: ProjectionConfig,
        fixed: FixedHeight,
        ah: AhConstants,
        stats: DatasetStats,
        azimuth: AzimuthParams,
    ) -> Result<PreprocessConfig> {
        let height = match self.height {
            HeightKind::Fh => HeightStrategy::Fixed { height: fixed },
            HeightKind::Ah => {
                HeightStrategy::Adaptive(AhParams::with_constants(ah.h_min, ah.alpha, ah.beta, stats)?)
            }
        };
        Ok(PreprocessConfig {
            projection,
            height,
            azimuth: AzimuthParams { mode: self.azimuth, ..azimuth },
        })
    }
}

/// The three tunable constants of the adaptive height estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AhConstants {
    pub h_min: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for AhConstants {
    fn default() -> Self {
        Self {
            h_min: AhParams::DEFAULT_H_MIN,
            alpha: AhParams::DEFAULT_ALPHA,
            beta: AhParams::DEFAULT_BETA,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let h = match self.height {
            HeightKind::Fh => "fh",
            HeightKind::Ah => "ah",
        };
        match self.azimuth {
            AzimuthMode::None => write!(f, "{h}"),
            AzimuthMode::Uniform => write!(f, "{h}+ae"),
            AzimuthMode::Gaussian => write!(f, "{h}+aue"),
        }
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let mut parts = lower.split('+');
        let height = match parts.next() {
            Some("fh") => HeightKind::Fh,
            Some("ah") => HeightKind::Ah,
            _ => return Err(Error::Config(format!("unknown variant {s:?}"))),
        };
        let azimuth = match parts.next() {
            None | Some("none") => AzimuthMode::None,
            Some("ae") => AzimuthMode::Uniform,
            Some("aue") => AzimuthMode::Gaussian,
            Some(other) => return Err(Error::Config(format!("unknown azimuth mode {other:?} in {s:?}"))),
        };
        if parts.next().is_some() {
            return Err(Error::Config(format!("unknown variant {s:?}")));
        }
        Ok(Variant { height, azimuth })
    }
}
