//! Frames, radar points, calibration and annotations.
//!
//! Radar detections carry planar positions only; `z` defaults to 0 and the
//! sensor mounting height lives in the calibration extrinsic.

mod io;
mod synth;

use std::sync::Arc;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{load_scene_set, load_scene_set_with, parse_scene_set, scene_set_to_json, write_scene_set};
pub use synth::{generate_synthetic, generate_synthetic_detailed, SynthConfig, SynthObject, SyntheticScenes};

/// One radar detection in the radar sensor frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadarPoint {
    /// Forward position, meters.
    pub x: f64,
    /// Lateral position, meters.
    pub y: f64,
    #[serde(default)]
    pub z: f64,
    pub vx: f64,
    pub vy: f64,
    /// Radar cross-section, dBsm.
    pub rcs: f64,
}

impl RadarPoint {
    pub fn new(x: f64, y: f64, vx: f64, vy: f64, rcs: f64) -> Self {
        Self { x, y, z: 0.0, vx, vy, rcs }
    }

    /// Planar distance `sqrt(x² + y²)`.
    pub fn distance(&self) -> f64 {
        (self.x * self.x + self.y * self.y).sqrt()
    }

    /// Measured azimuth `atan2(y, x)`.
    pub fn azimuth(&self) -> f64 {
        self.y.atan2(self.x)
    }
}

/// Open interval `(lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpenInterval {
    pub lo: f64,
    pub hi: f64,
}

impl OpenInterval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, v: f64) -> bool {
        v > self.lo && v < self.hi
    }
}

/// Admissible distance and RCS ranges. Points outside are rejected, never clamped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domains {
    pub distance: OpenInterval,
    pub rcs: OpenInterval,
}

impl Default for Domains {
    fn default() -> Self {
        Self {
            distance: OpenInterval::new(0.0, 260.0),
            rcs: OpenInterval::new(-5.0, 53.0),
        }
    }
}

impl Domains {
    pub fn check_point(&self, p: &RadarPoint) -> Result<()> {
        for (name, v) in [
            ("x", p.x),
            ("y", p.y),
            ("z", p.z),
            ("vx", p.vx),
            ("vy", p.vy),
            ("rcs", p.rcs),
        ] {
            if !v.is_finite() {
                return Err(Error::validation(name, format!("non-finite value {v}")));
            }
        }
        let d = p.distance();
        if !self.distance.contains(d) {
            return Err(Error::validation(
                "distance",
                format!(
                    "d = {d} outside ({}, {})",
                    self.distance.lo, self.distance.hi
                ),
            ));
        }
        if !self.rcs.contains(p.rcs) {
            return Err(Error::validation(
                "rcs",
                format!("rcs = {} outside ({}, {})", p.rcs, self.rcs.lo, self.rcs.hi),
            ));
        }
        Ok(())
    }
}

/// Pinhole intrinsics plus the rigid radar-to-camera transform.
///
/// Camera frame convention: X right, Y down, Z forward (optical axis).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraCalibration {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    /// Row-major 4×4 homogeneous transform, radar frame to camera frame.
    pub extrinsic: [f64; 16],
    #[serde(rename = "width")]
    pub image_width: u32,
    #[serde(rename = "height")]
    pub image_height: u32,
}

impl CameraCalibration {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        extrinsic: [f64; 16],
        image_width: u32,
        image_height: u32,
    ) -> Result<Self> {
        let cal = Self {
            fx,
            fy,
            cx,
            cy,
            extrinsic,
            image_width,
            image_height,
        };
        cal.validate()?;
        Ok(cal)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("fx", self.fx), ("fy", self.fy), ("cx", self.cx), ("cy", self.cy)] {
            if !v.is_finite() {
                return Err(Error::validation(name, "non-finite"));
            }
        }
        if self.extrinsic.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("extrinsic", "non-finite entry"));
        }
        if self.fx <= 0.0 {
            return Err(Error::validation("fx", "focal length must be positive"));
        }
        if self.fy <= 0.0 {
            return Err(Error::validation("fy", "focal length must be positive"));
        }
        if self.image_width == 0 || self.image_height == 0 {
            return Err(Error::validation("width", "image dimensions must be positive"));
        }
        if !(0.0..f64::from(self.image_width)).contains(&self.cx) {
            return Err(Error::validation("cx", "principal point outside image"));
        }
        if !(0.0..f64::from(self.image_height)).contains(&self.cy) {
            return Err(Error::validation("cy", "principal point outside image"));
        }
        let m = &self.extrinsic;
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| m[k * 4 + i] * m[k * 4 + j]).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                if (dot - expected).abs() > 1e-6 {
                    return Err(Error::validation(
                        "extrinsic",
                        "rotation block is not orthonormal",
                    ));
                }
            }
        }
        if m[12] != 0.0 || m[13] != 0.0 || m[14] != 0.0 || m[15] != 1.0 {
            return Err(Error::validation("extrinsic", "last row must be [0, 0, 0, 1]"));
        }
        Ok(())
    }

    /// Radar-frame point to camera-frame `(X, Y, Z)`.
    pub fn to_camera(&self, p: [f64; 3]) -> [f64; 3] {
        let m = &self.extrinsic;
        let row = |r: usize| m[r * 4] * p[0] + m[r * 4 + 1] * p[1] + m[r * 4 + 2] * p[2] + m[r * 4 + 3];
        [row(0), row(1), row(2)]
    }

    /// Pinhole projection of a camera-frame point. Caller guarantees `Z > 0`.
    pub fn project_camera(&self, c: [f64; 3]) -> (f64, f64) {
        (
            self.cx + self.fx * c[0] / c[2],
            self.cy + self.fy * c[1] / c[2],
        )
    }

    /// Extrinsic for a forward-looking camera mounted `height` meters above the
    /// radar frame origin and `setback` meters behind it, with radar axes
    /// x forward, y left, z up.
    pub fn forward_extrinsic(height: f64, setback: f64) -> [f64; 16] {
        [
            0.0, -1.0, 0.0, 0.0, //
            0.0, 0.0, -1.0, height, //
            1.0, 0.0, 0.0, setback, //
            0.0, 0.0, 0.0, 1.0,
        ]
    }
}

/// Axis-aligned 2D box in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box2D {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
    #[serde(rename = "class")]
    pub class_id: u32,
    /// Height of the source 3D annotation, meters.
    #[serde(rename = "h3d", default, skip_serializing_if = "Option::is_none")]
    pub box3d_height: Option<f64>,
    /// Ground-plane center of the source 3D annotation in the radar frame.
    #[serde(rename = "center", default, skip_serializing_if = "Option::is_none")]
    pub ground_center: Option<[f64; 2]>,
}

impl Box2D {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64, class_id: u32) -> Self {
        Self {
            x1,
            y1,
            x2,
            y2,
            class_id,
            box3d_height: None,
            ground_center: None,
        }
    }

    pub fn with_height(mut self, h: f64) -> Self {
        self.box3d_height = Some(h);
        self
    }

    pub fn with_center(mut self, x: f64, y: f64) -> Self {
        self.ground_center = Some([x, y]);
        self
    }

    /// Boundary-inclusive containment.
    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= self.x1 && u <= self.x2 && v >= self.y1 && v <= self.y2
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.x1 + self.x2), 0.5 * (self.y1 + self.y2))
    }

    pub fn validate(&self, width: u32, height: u32) -> Result<()> {
        for (name, v) in [("x1", self.x1), ("y1", self.y1), ("x2", self.x2), ("y2", self.y2)] {
            if !v.is_finite() {
                return Err(Error::validation(name, "non-finite"));
            }
        }
        if self.x1 >= self.x2 {
            return Err(Error::validation("x1", "box requires x1 < x2"));
        }
        if self.y1 >= self.y2 {
            return Err(Error::validation("y1", "box requires y1 < y2"));
        }
        let (w, h) = (f64::from(width - 1), f64::from(height - 1));
        if self.x1 < 0.0 || self.x2 > w {
            return Err(Error::validation("x2", "box outside image width"));
        }
        if self.y1 < 0.0 || self.y2 > h {
            return Err(Error::validation("y2", "box outside image height"));
        }
        if let Some(h3d) = self.box3d_height {
            if !(h3d.is_finite() && h3d > 0.0) {
                return Err(Error::validation("h3d", "3D height must be positive"));
            }
        }
        Ok(())
    }
}

/// Acquisition condition, used only for stratified reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConditionTag {
    Day,
    Night,
    Rain,
}

impl ConditionTag {
    pub const ALL: [ConditionTag; 3] = [ConditionTag::Day, ConditionTag::Night, ConditionTag::Rain];

    pub fn as_str(&self) -> &'static str {
        match self {
            ConditionTag::Day => "day",
            ConditionTag::Night => "night",
            ConditionTag::Rain => "rain",
        }
    }
}

impl std::fmt::Display for ConditionTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where a frame's image came from; kept so files round-trip unchanged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ImageSource {
    /// Path as written in the scene file (relative to the file's directory).
    Path(String),
    /// Base64 PNG payload without the `data:` prefix.
    Inline(String),
    /// Produced in memory; encoded inline on write.
    Generated,
}

#[derive(Debug, Clone)]
pub struct FrameImage {
    pub source: ImageSource,
    pub pixels: Arc<RgbImage>,
}

impl FrameImage {
    pub fn generated(pixels: RgbImage) -> Self {
        Self {
            source: ImageSource::Generated,
            pixels: Arc::new(pixels),
        }
    }

    pub fn width(&self) -> u32 {
        self.pixels.width()
    }

    pub fn height(&self) -> u32 {
        self.pixels.height()
    }
}

impl PartialEq for FrameImage {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source && *self.pixels == *other.pixels
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub id: String,
    pub image: FrameImage,
    pub radar_points: Vec<RadarPoint>,
    pub calibration: CameraCalibration,
    pub boxes: Vec<Box2D>,
    pub tag: ConditionTag,
}

impl Frame {
    pub fn validate(&self, domains: &Domains) -> Result<()> {
        self.calibration.validate()?;
        if self.image.width() != self.calibration.image_width
            || self.image.height() != self.calibration.image_height
        {
            return Err(Error::validation(
                "image",
                format!(
                    "image is {}x{} but calibration says {}x{}",
                    self.image.width(),
                    self.image.height(),
                    self.calibration.image_width,
                    self.calibration.image_height
                ),
            ));
        }
        for (i, p) in self.radar_points.iter().enumerate() {
            domains.check_point(p).map_err(|e| match e {
                Error::Validation { field, message, .. } => {
                    Error::validation(format!("radar[{i}].{field}"), message)
                }
                other => other,
            })?;
        }
        for (i, b) in self.boxes.iter().enumerate() {
            b.validate(self.calibration.image_width, self.calibration.image_height)
                .map_err(|e| match e {
                    Error::Validation { field, message, .. } => {
                        Error::validation(format!("boxes[{i}].{field}"), message)
                    }
                    other => other,
                })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSet {
    pub frames: Vec<Frame>,
    pub meta: serde_json::Value,
}

impl SceneSet {
    pub fn new(frames: Vec<Frame>) -> Self {
        Self {
            frames,
            meta: serde_json::Value::Object(Default::default()),
        }
    }

    pub fn point_count(&self) -> usize {
        self.frames.iter().map(|f| f.radar_points.len()).sum()
    }
}

/// Dataset-wide means used to normalize the adaptive height estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub mean_distance: f64,
    pub mean_rcs: f64,
    pub point_count: usize,
}

impl DatasetStats {
    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a RadarPoint>) -> Result<Self> {
        let mut d = NeumaierSum::default();
        let mut r = NeumaierSum::default();
        let mut n = 0usize;
        for p in points {
            d.add(p.distance());
            r.add(p.rcs);
            n += 1;
        }
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        Ok(Self {
            mean_distance: d.total() / n as f64,
            mean_rcs: r.total() / n as f64,
            point_count: n,
        })
    }
}

/// Means over every radar point of every frame.
pub fn compute_stats(scenes: &SceneSet) -> Result<DatasetStats> {
    DatasetStats::from_points(scenes.frames.iter().flat_map(|f| f.radar_points.iter()))
}

// Compensated summation keeps the means stable under reordering.
#[derive(Default)]
struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.comp
    }
}
