//! Alignment quality of preprocessed radar against annotated objects.
//!
//! Two per-frame measures:
//!
//! * projection error `MSE = (n_t − n_in)² / n_t²`, where `n_t` counts raster
//!   pixels carrying radar information and `n_in` those inside any 2D box;
//! * height error: for each detection `|H_box − h|` when its base pixel falls
//!   inside a box, otherwise `h` itself, averaged per frame.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extension::ExtendedDetection;
use crate::raster::RadarRaster;
use crate::scene::{Box2D, ConditionTag, Frame};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameMse {
    pub frame_id: String,
    pub n_t: usize,
    pub n_in: usize,
    pub mse: f64,
    /// No pixel carries radar information; `mse` is reported as 0.
    pub empty: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameHeightError {
    pub frame_id: String,
    pub per_point: Vec<f64>,
    pub mean: f64,
    /// No detections; `mean` is reported as 0.
    pub empty: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub mean: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub count: usize,
}

pub fn projection_mse(frame_id: impl Into<String>, raster: &RadarRaster, boxes: &[Box2D]) -> FrameMse {
    let mut n_t = 0usize;
    let mut n_in = 0usize;
    for (x, y) in raster.occupied_pixels() {
        n_t += 1;
        let (u, v) = (f64::from(x), f64::from(y));
        if boxes.iter().any(|b| b.contains(u, v)) {
            n_in += 1;
        }
    }
    let (mse, empty) = if n_t == 0 {
        (0.0, true)
    } else {
        let out = (n_t - n_in) as f64;
        let total = n_t as f64;
        ((out * out) / (total * total), false)
    };
    FrameMse {
        frame_id: frame_id.into(),
        n_t,
        n_in,
        mse,
        empty,
    }
}

pub fn height_error(frame: &Frame, detections: &[ExtendedDetection]) -> Result<FrameHeightError> {
    let mut per_point = Vec::with_capacity(detections.len());
    for (i, det) in detections.iter().enumerate() {
        let (u, v) = (det.base.u, det.base.v);
        let inside: Vec<usize> = frame
            .boxes
            .iter()
            .enumerate()
            .filter(|(_, b)| b.contains(u, v))
            .map(|(m, _)| m)
            .collect();
        let delta = match inside.as_slice() {
            [] => det.est_height,
            [only] => box_error(frame, *only, i, det)?,
            many => {
                let point = frame.radar_points.get(det.base.source_index);
                let m = nearest_box(frame, many, point.map(|p| [p.x, p.y]), (u, v));
                box_error(frame, m, i, det)?
            }
        };
        per_point.push(delta);
    }
    let empty = per_point.is_empty();
    let mean = if empty {
        0.0
    } else {
        per_point.iter().sum::<f64>() / per_point.len() as f64
    };
    Ok(FrameHeightError {
        frame_id: frame.id.clone(),
        per_point,
        mean,
        empty,
    })
}

fn box_error(frame: &Frame, m: usize, detection: usize, det: &ExtendedDetection) -> Result<f64> {
    let h = frame.boxes[m]
        .box3d_height
        .ok_or(Error::MissingAnnotation { detection, box_index: m })?;
    Ok((h - det.est_height).abs())
}

// Nearest ground-plane center when every candidate has one, otherwise the
// nearest 2D center to the base pixel. Ties go to the lower box index.
fn nearest_box(frame: &Frame, candidates: &[usize], point: Option<[f64; 2]>, pixel: (f64, f64)) -> usize {
    let ground = point.filter(|_| candidates.iter().all(|m| frame.boxes[*m].ground_center.is_some()));
    let dist = |m: usize| -> f64 {
        let b = &frame.boxes[m];
        match (ground, b.ground_center) {
            (Some(p), Some(c)) => (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2),
            _ => {
                let (cu, cv) = b.center();
                (pixel.0 - cu).powi(2) + (pixel.1 - cv).powi(2)
            }
        }
    };
    let mut best = candidates[0];
    let mut best_d = dist(best);
    for &m in &candidates[1..] {
        let d = dist(m);
        if d < best_d {
            best = m;
            best_d = d;
        }
    }
    best
}

/// Mean and inclusive linear-interpolation quartiles.
pub fn summarize(values: &[f64]) -> Result<DistributionSummary> {
    if values.is_empty() {
        return Err(Error::Domain("cannot summarize an empty list".into()));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::NonFinite("summary input"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let quantile = |p: f64| {
        let pos = p * (sorted.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
    };
    // Shifted by the minimum so a constant list has exactly that mean.
    let shift = sorted[0];
    let mean = shift + sorted.iter().map(|v| v - shift).sum::<f64>() / sorted.len() as f64;
    Ok(DistributionSummary {
        mean,
        q1: quantile(0.25),
        median: quantile(0.5),
        q3: quantile(0.75),
        count: sorted.len(),
    })
}

/// Both measures for one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameMetrics {
    pub frame_id: String,
    pub tag: ConditionTag,
    pub n_t: usize,
    pub n_in: usize,
    pub mse: f64,
    pub mse_empty: bool,
    pub height_error: f64,
    pub height_empty: bool,
    pub detections: usize,
}

impl FrameMetrics {
    pub fn new(frame: &Frame, mse: &FrameMse, height: &FrameHeightError) -> Self {
        Self {
            frame_id: frame.id.clone(),
            tag: frame.tag,
            n_t: mse.n_t,
            n_in: mse.n_in,
            mse: mse.mse,
            mse_empty: mse.empty,
            height_error: height.mean,
            height_empty: height.empty,
            detections: height.per_point.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub frames: usize,
    /// Frames with no radar pixels, left out of the MSE summary.
    pub empty_mse_frames: usize,
    /// Frames with no detections, left out of the height-error summary.
    pub empty_height_frames: usize,
    pub mse: Option<DistributionSummary>,
    pub height_error: Option<DistributionSummary>,
}

fn group_summary<'a>(frames: impl Iterator<Item = &'a FrameMetrics>) -> GroupSummary {
    let mut count = 0;
    let mut mse = Vec::new();
    let mut dh = Vec::new();
    for f in frames {
        count += 1;
        if !f.mse_empty {
            mse.push(f.mse);
        }
        if !f.height_empty {
            dh.push(f.height_error);
        }
    }
    GroupSummary {
        frames: count,
        empty_mse_frames: count - mse.len(),
        empty_height_frames: count - dh.len(),
        mse: summarize(&mse).ok(),
        height_error: summarize(&dh).ok(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub overall: GroupSummary,
    pub by_tag: BTreeMap<ConditionTag, GroupSummary>,
}

/// Dataset-level summaries, overall and per condition tag.
pub fn aggregate(frames: &[FrameMetrics]) -> Aggregate {
    let mut tags: Vec<ConditionTag> = frames.iter().map(|f| f.tag).collect();
    tags.sort();
    tags.dedup();
    let by_tag = tags
        .into_iter()
        .map(|t| (t, group_summary(frames.iter().filter(|f| f.tag == t))))
        .collect();
    Aggregate {
        overall: group_summary(frames.iter()),
        by_tag,
    }
}
