//! Vertical (height) and horizontal (azimuth) extension of projected radar points.
//!
//! Radar returns carry no elevation, so each projection is drawn as a vertical
//! line whose metric height is either a constant (FH) or estimated per point
//! from its distance and RCS relative to the dataset means (AH):
//!
//! ```text
//! H = max(h_min, min(alpha − d/μ_d, beta + r/μ_r))
//! ```
//!
//! The line can then be copied to `half_width` neighbouring columns on each
//! side (AE), optionally attenuating the RCS channel by a Gaussian over the
//! column's azimuth offset with the sensor's angular accuracy as standard
//! deviation (AUE).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::projection::{meters_to_pixel_height, pixel_column_angle, ProjectedPoint};
use crate::scene::{CameraCalibration, DatasetStats, RadarPoint};

/// Constant extension height, meters. Always positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct FixedHeight(f64);

impl FixedHeight {
    pub const DEFAULT: FixedHeight = FixedHeight(3.0);

    pub fn new(meters: f64) -> Result<Self> {
        if meters.is_finite() && meters > 0.0 {
            Ok(Self(meters))
        } else {
            Err(Error::validation("fh_height", format!("fixed height must be positive, got {meters}")))
        }
    }

    pub fn meters(self) -> f64 {
        self.0
    }
}

impl Default for FixedHeight {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl TryFrom<f64> for FixedHeight {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<FixedHeight> for f64 {
    fn from(h: FixedHeight) -> f64 {
        h.0
    }
}

pub fn estimate_height_fh(fixed: FixedHeight) -> f64 {
    fixed.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AhParams {
    pub h_min: f64,
    pub alpha: f64,
    pub beta: f64,
    pub stats: DatasetStats,
}

impl AhParams {
    pub const DEFAULT_H_MIN: f64 = 1.0;
    pub const DEFAULT_ALPHA: f64 = 6.0;
    pub const DEFAULT_BETA: f64 = 0.5;

    /// Default constants (`h_min = 1`, `alpha = 6`, `beta = 0.5`) with the given stats.
    pub fn new(stats: DatasetStats) -> Result<Self> {
        Self::with_constants(Self::DEFAULT_H_MIN, Self::DEFAULT_ALPHA, Self::DEFAULT_BETA, stats)
    }

    pub fn with_constants(h_min: f64, alpha: f64, beta: f64, stats: DatasetStats) -> Result<Self> {
        let p = Self { h_min, alpha, beta, stats };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h_min.is_finite() && self.h_min > 0.0) {
            return Err(Error::validation("hmin", "h_min must be positive"));
        }
        if !(self.alpha.is_finite() && self.beta.is_finite()) {
            return Err(Error::validation("alpha", "alpha and beta must be finite"));
        }
        if self.stats.point_count == 0 {
            return Err(Error::EmptyDataset);
        }
        if !(self.stats.mean_distance > 0.0 && self.stats.mean_distance.is_finite()) {
            return Err(Error::validation("stats.mean_distance", "mean distance must be positive"));
        }
        if !(self.stats.mean_rcs != 0.0 && self.stats.mean_rcs.is_finite()) {
            return Err(Error::validation("stats.mean_rcs", "mean RCS must be finite and non-zero"));
        }
        Ok(())
    }
}

/// Adaptive height for one point at distance `d` with RCS `r`.
pub fn estimate_height_ah(d: f64, r: f64, params: &AhParams) -> Result<f64> {
    if params.stats.point_count == 0 {
        return Err(Error::EmptyDataset);
    }
    if !(d > 0.0) {
        return Err(Error::Domain(format!("distance must be positive, got {d}")));
    }
    let by_distance = params.alpha - d / params.stats.mean_distance;
    let by_rcs = params.beta + r / params.stats.mean_rcs;
    Ok(params.h_min.max(by_distance.min(by_rcs)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum HeightStrategy {
    Fixed { height: FixedHeight },
    Adaptive(AhParams),
}

impl HeightStrategy {
    pub fn estimate(&self, p: &RadarPoint) -> Result<f64> {
        match self {
            HeightStrategy::Fixed { height } => Ok(estimate_height_fh(*height)),
            HeightStrategy::Adaptive(params) => estimate_height_ah(p.distance(), p.rcs, params),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AzimuthMode {
    #[serde(rename = "none")]
    None,
    /// Uniform copy across neighbouring columns (AE).
    #[serde(rename = "ae")]
    Uniform,
    /// Uniform copy with Gaussian RCS attenuation (AUE).
    #[serde(rename = "aue")]
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AzimuthParams {
    pub half_width: u32,
    /// Angular standard deviation, radians.
    pub sigma: f64,
    pub mode: AzimuthMode,
}

impl AzimuthParams {
    pub const DEFAULT_HALF_WIDTH: u32 = 3;
    pub const DEFAULT_SIGMA_DEG: f64 = 0.3;

    pub fn new(mode: AzimuthMode, half_width: u32, sigma: f64) -> Result<Self> {
        let p = Self { half_width, sigma, mode };
        p.validate()?;
        Ok(p)
    }

    pub fn none() -> Self {
        Self { mode: AzimuthMode::None, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::validation("sigma", "azimuth sigma must be positive"));
        }
        Ok(())
    }
}

impl Default for AzimuthParams {
    fn default() -> Self {
        Self {
            half_width: Self::DEFAULT_HALF_WIDTH,
            sigma: Self::DEFAULT_SIGMA_DEG.to_radians(),
            mode: AzimuthMode::Gaussian,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnWeight {
    /// Column offset from the projected column, pixels.
    pub offset: i32,
    /// Factor applied to the RCS channel, in `(0, 1]`.
    pub weight: f64,
}

/// Per-column RCS weights around a projection at column `u_center`.
///
/// For AUE the azimuth offset of column `±k` is the half-span
/// `(θ(u + k) − θ(u − k)) / 2` of exact per-column angles, so the weights are
/// exactly symmetric and equal `exp(−Δθ²/(2σ²))`, peaking at 1 in the center.
pub fn azimuth_weights(params: &AzimuthParams, cal: &CameraCalibration, u_center: f64) -> Vec<ColumnWeight> {
    let w = params.half_width as i32;
    match params.mode {
        AzimuthMode::None => vec![ColumnWeight { offset: 0, weight: 1.0 }],
        AzimuthMode::Uniform => (-w..=w).map(|offset| ColumnWeight { offset, weight: 1.0 }).collect(),
        AzimuthMode::Gaussian => {
            let two_var = 2.0 * params.sigma * params.sigma;
            let flank: Vec<f64> = (1..=w)
                .map(|k| {
                    let k = f64::from(k);
                    let dtheta = 0.5
                        * (pixel_column_angle(u_center + k, cal) - pixel_column_angle(u_center - k, cal));
                    (-dtheta * dtheta / two_var).exp()
                })
                .collect();
            (-w..=w)
                .map(|offset| {
                    let weight = if offset == 0 { 1.0 } else { flank[offset.unsigned_abs() as usize - 1] };
                    ColumnWeight { offset, weight }
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedDetection {
    pub base: ProjectedPoint,
    /// Estimated object height, meters.
    pub est_height: f64,
    /// Vertical extent in pixels (unrounded).
    pub pixel_height: f64,
    pub column_weights: Vec<ColumnWeight>,
}

/// Extend one projected point. Distance, velocities are copied unweighted to
/// every column at rasterization; only the RCS uses `column_weights`.
pub fn extend(
    p: &ProjectedPoint,
    raw: &RadarPoint,
    height: &HeightStrategy,
    azimuth: &AzimuthParams,
    cal: &CameraCalibration,
) -> Result<ExtendedDetection> {
    let est_height = height.estimate(raw)?;
    let pixel_height = meters_to_pixel_height(est_height, p.depth, cal)?;
    Ok(ExtendedDetection {
        base: *p,
        est_height,
        pixel_height,
        column_weights: azimuth_weights(azimuth, cal, p.u),
    })
}
