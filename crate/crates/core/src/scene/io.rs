//! JSON scene-set files.
//!
//! ```text
//! {"frames": [{"id", "image", "calibration": {...}, "radar": [...], "boxes": [...], "tag"}],
//!  "meta": {...}}
//! ```
//!
//! `image` is either a path relative to the scene file or an inline
//! `data:image/png;base64,...` payload.

use std::io::Cursor;
use std::path::Path;
use std::sync::Arc;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use image::{ImageFormat, RgbImage};
use serde::{Deserialize, Serialize};

use super::{Box2D, CameraCalibration, ConditionTag, Domains, Frame, FrameImage, ImageSource, RadarPoint, SceneSet};
use crate::error::{Error, Result};

const INLINE_PREFIX: &str = "data:image/png;base64,";

#[derive(Deserialize)]
struct RawSceneSet {
    frames: Vec<serde_json::Value>,
    #[serde(default)]
    meta: Option<serde_json::Value>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameRecord {
    id: String,
    image: String,
    calibration: CameraCalibration,
    #[serde(default)]
    radar: Vec<RadarPoint>,
    #[serde(default)]
    boxes: Vec<Box2D>,
    tag: ConditionTag,
}

#[derive(Serialize)]
struct SceneSetRecord<'a> {
    frames: Vec<FrameRecord>,
    meta: &'a serde_json::Value,
}

pub fn load_scene_set(path: impl AsRef<Path>) -> Result<SceneSet> {
    load_scene_set_with(path, &Domains::default())
}

pub fn load_scene_set_with(path: impl AsRef<Path>, domains: &Domains) -> Result<SceneSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_scene_set(&text, base, domains)
}

/// Parse and validate a scene set. Relative image paths resolve against `base_dir`.
pub fn parse_scene_set(text: &str, base_dir: &Path, domains: &Domains) -> Result<SceneSet> {
    let raw: RawSceneSet = serde_json::from_str(text).map_err(|e| Error::Parse {
        frame: None,
        message: e.to_string(),
    })?;
    let mut frames = Vec::with_capacity(raw.frames.len());
    for (index, value) in raw.frames.into_iter().enumerate() {
        let record: FrameRecord = serde_json::from_value(value).map_err(|e| Error::Parse {
            frame: Some(index),
            message: e.to_string(),
        })?;
        let frame = frame_from_record(record, base_dir).map_err(|e| e.in_frame(index))?;
        frame.validate(domains).map_err(|e| e.in_frame(index))?;
        frames.push(frame);
    }
    Ok(SceneSet {
        frames,
        meta: raw
            .meta
            .unwrap_or_else(|| serde_json::Value::Object(Default::default())),
    })
}

fn frame_from_record(record: FrameRecord, base_dir: &Path) -> Result<Frame> {
    let (source, pixels) = if let Some(payload) = record.image.strip_prefix(INLINE_PREFIX) {
        let bytes = BASE64.decode(payload).map_err(|e| Error::Parse {
            frame: None,
            message: format!("inline image: {e}"),
        })?;
        let img = image::load_from_memory_with_format(&bytes, ImageFormat::Png)?.to_rgb8();
        (ImageSource::Inline(payload.to_string()), img)
    } else {
        let full = base_dir.join(&record.image);
        let img = image::open(&full)
            .map_err(|e| match e {
                image::ImageError::IoError(io) => Error::io(&full, io),
                other => Error::Image(other),
            })?
            .to_rgb8();
        (ImageSource::Path(record.image), img)
    };
    Ok(Frame {
        id: record.id,
        image: FrameImage {
            source,
            pixels: Arc::new(pixels),
        },
        radar_points: record.radar,
        calibration: record.calibration,
        boxes: record.boxes,
        tag: record.tag,
    })
}

pub(crate) fn encode_png_base64(img: &RgbImage) -> Result<String> {
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, ImageFormat::Png)?;
    Ok(BASE64.encode(buf.into_inner()))
}

/// Serialize a scene set. Generated images are embedded as inline PNG.
pub fn scene_set_to_json(scenes: &SceneSet) -> Result<String> {
    let frames = scenes
        .frames
        .iter()
        .map(|f| {
            let image = match &f.image.source {
                ImageSource::Path(p) => p.clone(),
                ImageSource::Inline(b64) => format!("{INLINE_PREFIX}{b64}"),
                ImageSource::Generated => {
                    format!("{INLINE_PREFIX}{}", encode_png_base64(&f.image.pixels)?)
                }
            };
            Ok(FrameRecord {
                id: f.id.clone(),
                image,
                calibration: f.calibration,
                radar: f.radar_points.clone(),
                boxes: f.boxes.clone(),
                tag: f.tag,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let record = SceneSetRecord {
        frames,
        meta: &scenes.meta,
    };
    let mut text = serde_json::to_string_pretty(&record).map_err(|e| Error::Parse {
        frame: None,
        message: e.to_string(),
    })?;
    text.push('\n');
    Ok(text)
}

pub fn write_scene_set(scenes: &SceneSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = scene_set_to_json(scenes)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
