//! Best-effort conversion of a nuScenes-style JSON export.
//!
//! ```text
//! {"samples": [{"token", "image", "description"?, "calibration": {...},
//!               "radar": [{"x", "y", "vx", "vy", "rcs", ...}],
//!               "annotations": [{"category", "bbox": [x1, y1, x2, y2], "height"?, "center"?}]}]}
//! ```
//!
//! Radar points outside the distance/RCS domains and annotations of other
//! categories are dropped and counted.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rfk_core::scene::{load_scene_set, Box2D, CameraCalibration, ConditionTag, Domains, RadarPoint};

use super::write_bytes;
use crate::args::ConvertArgs;
use crate::error::{CliError, CliResult};

/// The seven high-level classes, in class-id order.
pub const CLASSES: [&str; 7] = ["car", "truck", "human", "bicycle", "motorcycle", "bus", "trailer"];

pub fn class_id(category: &str) -> Option<u32> {
    let c = category.to_ascii_lowercase();
    let name = match c.as_str() {
        "vehicle.car" | "car" => "car",
        "vehicle.truck" | "truck" => "truck",
        "vehicle.bicycle" | "bicycle" => "bicycle",
        "vehicle.motorcycle" | "motorcycle" => "motorcycle",
        "vehicle.trailer" | "trailer" => "trailer",
        "human" | "pedestrian" => "human",
        s if s.starts_with("human.pedestrian") => "human",
        s if s.starts_with("vehicle.bus") || s == "bus" => "bus",
        _ => return None,
    };
    CLASSES.iter().position(|n| *n == name).map(|i| i as u32)
}

/// Night takes precedence over rain when a description mentions both.
pub fn tag_from_description(description: &str) -> ConditionTag {
    let d = description.to_ascii_lowercase();
    if d.contains("night") {
        ConditionTag::Night
    } else if d.contains("rain") {
        ConditionTag::Rain
    } else {
        ConditionTag::Day
    }
}

#[derive(Debug, Deserialize)]
struct Export {
    samples: Vec<Sample>,
}

#[derive(Debug, Deserialize)]
struct Sample {
    token: String,
    image: String,
    #[serde(default)]
    description: String,
    calibration: CameraCalibration,
    #[serde(default)]
    radar: Vec<ExportPoint>,
    #[serde(default)]
    annotations: Vec<Annotation>,
}

#[derive(Debug, Deserialize)]
struct ExportPoint {
    x: f64,
    y: f64,
    #[serde(default)]
    vx: f64,
    #[serde(default)]
    vy: f64,
    rcs: f64,
}

#[derive(Debug, Deserialize)]
struct Annotation {
    category: String,
    bbox: [f64; 4],
    height: Option<f64>,
    center: Option<[f64; 2]>,
}

#[derive(Debug, Serialize)]
struct OutFrame {
    id: String,
    image: String,
    calibration: CameraCalibration,
    radar: Vec<RadarPoint>,
    boxes: Vec<Box2D>,
    tag: ConditionTag,
}

#[derive(Debug, Serialize)]
struct OutSet {
    frames: Vec<OutFrame>,
    meta: serde_json::Value,
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct ConvertCounts {
    pub frames: usize,
    pub points: usize,
    pub dropped_points: usize,
    pub boxes: usize,
    pub dropped_boxes: usize,
}

fn clip_box(a: &Annotation, class: u32, cal: &CameraCalibration) -> Option<Box2D> {
    let w = f64::from(cal.image_width) - 1.0;
    let h = f64::from(cal.image_height) - 1.0;
    let [x1, y1, x2, y2] = a.bbox;
    let b = Box2D::new(x1.clamp(0.0, w), y1.clamp(0.0, h), x2.clamp(0.0, w), y2.clamp(0.0, h), class);
    if !(b.x1 < b.x2 && b.y1 < b.y2) {
        return None;
    }
    let b = match a.height {
        Some(hh) => b.with_height(hh),
        None => b,
    };
    Some(match a.center {
        Some([cx, cy]) => b.with_center(cx, cy),
        None => b,
    })
}

fn image_path(image: &str, input_dir: &Path) -> String {
    let p = Path::new(image);
    if p.is_absolute() {
        return image.to_string();
    }
    let joined: PathBuf = input_dir.join(p);
    std::path::absolute(&joined).unwrap_or(joined).to_string_lossy().into_owned()
}

/// Convert export text into scene-set JSON text.
pub fn convert_text(text: &str, input_dir: &Path) -> CliResult<(String, ConvertCounts)> {
    let export: Export = serde_json::from_str(text).map_err(|e| CliError::Validation(format!("export: {e}")))?;
    let domains = Domains::default();
    let mut counts = ConvertCounts::default();
    let mut frames = Vec::with_capacity(export.samples.len());
    for s in export.samples {
        let mut radar = Vec::with_capacity(s.radar.len());
        for p in &s.radar {
            let point = RadarPoint::new(p.x, p.y, p.vx, p.vy, p.rcs);
            if domains.check_point(&point).is_ok() {
                radar.push(point);
            } else {
                counts.dropped_points += 1;
            }
        }
        let mut boxes = Vec::with_capacity(s.annotations.len());
        for a in &s.annotations {
            match class_id(&a.category).and_then(|c| clip_box(a, c, &s.calibration)) {
                Some(b) => boxes.push(b),
                None => counts.dropped_boxes += 1,
            }
        }
        counts.frames += 1;
        counts.points += radar.len();
        counts.boxes += boxes.len();
        frames.push(OutFrame {
            id: s.token,
            image: image_path(&s.image, input_dir),
            calibration: s.calibration,
            radar,
            boxes,
            tag: tag_from_description(&s.description),
        });
    }
    let set = OutSet { frames, meta: serde_json::json!({ "generator": "convert", "classes": CLASSES }) };
    let mut out = serde_json::to_string_pretty(&set).map_err(|e| CliError::Validation(e.to_string()))?;
    out.push('\n');
    Ok((out, counts))
}

pub fn run(args: &ConvertArgs) -> CliResult<String> {
    let text = std::fs::read_to_string(&args.input).map_err(|e| CliError::io(&args.input, e))?;
    let input_dir = args.input.parent().unwrap_or_else(|| Path::new("."));
    let (out, c) = convert_text(&text, input_dir)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        super::create_dir(dir)?;
    }
    write_bytes(&args.out, out.as_bytes())?;
    if !args.no_check {
        load_scene_set(&args.out)?;
    }
    Ok(format!(
        "converted {} frames: {} points ({} dropped), {} boxes ({} dropped)",
        c.frames, c.points, c.dropped_points, c.boxes, c.dropped_boxes
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn categories_map_to_seven_classes() {
        assert_eq!(class_id("vehicle.car"), Some(0));
        assert_eq!(class_id("human.pedestrian.adult"), Some(2));
        assert_eq!(class_id("vehicle.bus.rigid"), Some(5));
        assert_eq!(class_id("vehicle.trailer"), Some(6));
        assert_eq!(class_id("movable_object.barrier"), None);
    }

    #[test]
    fn tags_from_descriptions() {
        assert_eq!(tag_from_description("Night, rain, parked cars"), ConditionTag::Night);
        assert_eq!(tag_from_description("Rain, intersection"), ConditionTag::Rain);
        assert_eq!(tag_from_description("busy street"), ConditionTag::Day);
    }
}
