//! Four-channel radar image aligned with the camera image.
//!
//! Channels are `(d, r, vx, vy)`. Each extended detection fills a vertical
//! span growing upward from its rounded base pixel across its columns. When
//! two detections hit the same pixel, the one closer to the radar (smaller
//! `d`, then smaller source index) wins, which makes the result independent
//! of detection order. Pixels without radar information stay zero.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use image::{ImageBuffer, Luma, Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extension::ExtendedDetection;
use crate::scene::{Box2D, Frame, FrameImage};

pub const RASTER_MAGIC: &[u8; 4] = b"RRAS";
pub const RASTER_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    D,
    R,
    Vx,
    Vy,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::D, Channel::R, Channel::Vx, Channel::Vy];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Channel::D => "d",
            Channel::R => "r",
            Channel::Vx => "vx",
            Channel::Vy => "vy",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadarRaster {
    width: u32,
    height: u32,
    /// Four row-major planes back to back, in `Channel` order.
    planes: Vec<f32>,
    occupancy: Vec<bool>,
}

impl RadarRaster {
    pub fn empty(width: u32, height: u32) -> Self {
        let n = width as usize * height as usize;
        Self {
            width,
            height,
            planes: vec![0.0; 4 * n],
            occupancy: vec![false; n],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    fn pixels(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn channel(&self, c: Channel) -> &[f32] {
        let n = self.pixels();
        &self.planes[c.index() * n..(c.index() + 1) * n]
    }

    pub fn occupancy(&self) -> &[bool] {
        &self.occupancy
    }

    pub fn is_occupied(&self, x: u32, y: u32) -> bool {
        self.occupancy[(y * self.width + x) as usize]
    }

    /// `(d, r, vx, vy)` at a pixel.
    pub fn values(&self, x: u32, y: u32) -> [f32; 4] {
        let n = self.pixels();
        let i = (y * self.width + x) as usize;
        [self.planes[i], self.planes[n + i], self.planes[2 * n + i], self.planes[3 * n + i]]
    }

    pub fn occupied_count(&self) -> usize {
        self.occupancy.iter().filter(|o| **o).count()
    }

    /// Integer coordinates of occupied pixels, row-major.
    pub fn occupied_pixels(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.width;
        self.occupancy
            .iter()
            .enumerate()
            .filter(|(_, o)| **o)
            .map(move |(i, _)| (i as u32 % w, i as u32 / w))
    }

    fn set(&mut self, i: usize, values: [f32; 4]) {
        let n = self.pixels();
        for (c, v) in values.into_iter().enumerate() {
            self.planes[c * n + i] = v;
        }
        self.occupancy[i] = true;
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.pixels();
        let mut out = Vec::with_capacity(16 + n * 17);
        out.extend_from_slice(RASTER_MAGIC);
        out.extend_from_slice(&RASTER_VERSION.to_le_bytes());
        out.extend_from_slice(&self.width.to_le_bytes());
        out.extend_from_slice(&self.height.to_le_bytes());
        for v in &self.planes {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend(self.occupancy.iter().map(|o| u8::from(*o)));
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Parse { frame: None, message: format!("raster: {m}") };
        if bytes.len() < 16 || &bytes[..4] != RASTER_MAGIC {
            return Err(bad("missing RRAS header"));
        }
        let word = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        if word(4) != RASTER_VERSION {
            return Err(bad(&format!("unsupported version {}", word(4))));
        }
        let (width, height) = (word(8), word(12));
        let n = width as usize * height as usize;
        if bytes.len() != 16 + 17 * n {
            return Err(bad("length does not match dimensions"));
        }
        let planes = bytes[16..16 + 16 * n]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let occupancy = bytes[16 + 16 * n..]
            .iter()
            .map(|b| match b {
                0 => Ok(false),
                1 => Ok(true),
                _ => Err(bad("occupancy byte must be 0 or 1")),
            })
            .collect::<Result<_>>()?;
        Ok(Self { width, height, planes, occupancy })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

/// Rasterize extended detections of `frame` into its image grid.
pub fn rasterize(frame: &Frame, detections: &[ExtendedDetection]) -> RadarRaster {
    let w = frame.calibration.image_width;
    let h = frame.calibration.image_height;
    let mut raster = RadarRaster::empty(w, h);
    // Winning (distance, source index) per pixel.
    let mut keys: Vec<(f64, usize)> = vec![(f64::INFINITY, usize::MAX); raster.pixels()];

    for det in detections {
        let Some(point) = frame.radar_points.get(det.base.source_index) else {
            continue;
        };
        let key = (point.distance(), det.base.source_index);
        let base_col = det.base.u.round() as i64;
        let base_row = det.base.v.round() as i64;
        let top_row = base_row - det.pixel_height.round() as i64;
        let rows = top_row.max(0)..=base_row.min(i64::from(h) - 1);
        if rows.is_empty() {
            continue;
        }
        for cw in &det.column_weights {
            let col = base_col + i64::from(cw.offset);
            if col < 0 || col >= i64::from(w) {
                continue;
            }
            let values = [
                key.0 as f32,
                (point.rcs * cw.weight) as f32,
                point.vx as f32,
                point.vy as f32,
            ];
            for row in rows.clone() {
                let i = row as usize * w as usize + col as usize;
                let current = keys[i];
                if key.0.total_cmp(&current.0).then(key.1.cmp(&current.1)).is_lt() {
                    keys[i] = key;
                    raster.set(i, values);
                }
            }
        }
    }
    raster
}

/// H×W×3 grid of image intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    pub width: u32,
    pub height: u32,
    pub data: Vec<f32>,
}

impl ImageGrid {
    pub fn from_rgb(img: &RgbImage) -> Self {
        Self {
            width: img.width(),
            height: img.height(),
            data: img.as_raw().iter().map(|v| f32::from(*v)).collect(),
        }
    }
}

/// Shift intensities from `[0, 255]` to `[−127.5, 127.5]`.
pub fn normalize_image(image: &ImageGrid) -> Result<ImageGrid> {
    if image.data.len() != image.width as usize * image.height as usize * 3 {
        return Err(Error::ShapeMismatch("image data length does not match H×W×3".into()));
    }
    if let Some(bad) = image.data.iter().find(|v| !(0.0..=255.0).contains(*v)) {
        return Err(Error::validation("image", format!("intensity {bad} outside [0, 255]")));
    }
    Ok(ImageGrid {
        width: image.width,
        height: image.height,
        data: image.data.iter().map(|v| v - 127.5).collect(),
    })
}

/// Bilinearly resample the image to `width × height` and scale intrinsics and
/// boxes by the same factors (`u' = sx·u`, `v' = sy·v`).
pub fn resize_frame(frame: &Frame, width: u32, height: u32) -> Result<Frame> {
    if width == 0 || height == 0 {
        return Err(Error::Config(format!("resize target {width}x{height} must be positive")));
    }
    let src_w = frame.image.width();
    let src_h = frame.image.height();
    if (width, height) == (src_w, src_h) {
        return Ok(frame.clone());
    }
    let sx = f64::from(width) / f64::from(src_w);
    let sy = f64::from(height) / f64::from(src_h);
    let pixels = resample_bilinear(&frame.image.pixels, width, height, sx, sy);

    let mut cal = frame.calibration;
    cal.fx *= sx;
    cal.fy *= sy;
    cal.cx *= sx;
    cal.cy *= sy;
    cal.image_width = width;
    cal.image_height = height;
    cal.validate()?;

    let max_x = f64::from(width - 1);
    let max_y = f64::from(height - 1);
    let boxes = frame
        .boxes
        .iter()
        .map(|b| Box2D {
            x1: (b.x1 * sx).min(max_x),
            y1: (b.y1 * sy).min(max_y),
            x2: (b.x2 * sx).min(max_x),
            y2: (b.y2 * sy).min(max_y),
            ..*b
        })
        .collect();

    Ok(Frame {
        id: frame.id.clone(),
        image: FrameImage::generated(pixels),
        radar_points: frame.radar_points.clone(),
        calibration: cal,
        boxes,
        tag: frame.tag,
    })
}

fn resample_bilinear(src: &Arc<RgbImage>, width: u32, height: u32, sx: f64, sy: f64) -> RgbImage {
    let max_x = f64::from(src.width() - 1);
    let max_y = f64::from(src.height() - 1);
    RgbImage::from_fn(width, height, |x, y| {
        let fx = (f64::from(x) / sx).min(max_x);
        let fy = (f64::from(y) / sy).min(max_y);
        let (x0, y0) = (fx.floor() as u32, fy.floor() as u32);
        let x1 = (x0 + 1).min(src.width() - 1);
        let y1 = (y0 + 1).min(src.height() - 1);
        let (tx, ty) = (fx - f64::from(x0), fy - f64::from(y0));
        let mut out = [0u8; 3];
        for (c, o) in out.iter_mut().enumerate() {
            let p = |xx, yy| f64::from(src.get_pixel(xx, yy).0[c]);
            let top = p(x0, y0) * (1.0 - tx) + p(x1, y0) * tx;
            let bottom = p(x0, y1) * (1.0 - tx) + p(x1, y1) * tx;
            *o = (top * (1.0 - ty) + bottom * ty).round().clamp(0.0, 255.0) as u8;
        }
        Rgb(out)
    })
}

/// Min-max scale recorded next to a 16-bit channel PNG.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PngScale {
    pub channel: Channel,
    pub min: f32,
    pub max: f32,
}

/// Write one channel as a 16-bit grayscale PNG plus a `.json` sidecar with the scale.
pub fn export_channel_png(raster: &RadarRaster, channel: Channel, path: impl AsRef<Path>) -> Result<PngScale> {
    let path = path.as_ref();
    let plane = raster.channel(channel);
    let min = plane.iter().copied().fold(f32::INFINITY, f32::min);
    let max = plane.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let span = max - min;
    let data: Vec<u16> = plane
        .iter()
        .map(|v| {
            if span > 0.0 {
                (((v - min) / span) * 65535.0).round() as u16
            } else {
                0
            }
        })
        .collect();
    let img: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(raster.width, raster.height, data).expect("plane matches dimensions");
    img.save(path)?;
    let scale = PngScale { channel, min, max };
    let sidecar = path.with_extension("json");
    let text = serde_json::to_string_pretty(&scale).expect("scale serializes");
    std::fs::write(&sidecar, text).map_err(|e| Error::io(&sidecar, e))?;
    Ok(scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extension::ColumnWeight;
    use crate::projection::ProjectedPoint;
    use crate::scene::tests::test_calibration;
    use crate::scene::{ConditionTag, RadarPoint};

    fn frame(points: Vec<RadarPoint>) -> Frame {
        let cal = test_calibration();
        Frame {
            id: "t".into(),
            image: FrameImage::generated(RgbImage::new(640, 360)),
            radar_points: points,
            calibration: cal,
            boxes: vec![],
            tag: ConditionTag::Day,
        }
    }

    fn det(u: f64, v: f64, ph: f64, src: usize, cols: Vec<ColumnWeight>) -> ExtendedDetection {
        ExtendedDetection {
            base: ProjectedPoint { u, v, depth: 10.0, source_index: src },
            est_height: 1.0,
            pixel_height: ph,
            column_weights: cols,
        }
    }

    fn single() -> Vec<ColumnWeight> {
        vec![ColumnWeight { offset: 0, weight: 1.0 }]
    }

    #[test]
    fn zero_detections_give_empty_raster() {
        let r = rasterize(&frame(vec![]), &[]);
        assert_eq!(r.occupied_count(), 0);
        assert!(Channel::ALL.iter().all(|c| r.channel(*c).iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn nearer_point_wins_collision() {
        let pts = vec![
            RadarPoint::new(20.0, 0.0, 2.0, 0.5, 10.0),
            RadarPoint::new(10.0, 0.0, -1.0, 0.25, 3.0),
        ];
        let f = frame(pts);
        let dets = [det(100.0, 200.0, 0.0, 0, single()), det(100.2, 199.8, 0.0, 1, single())];
        let r = rasterize(&f, &dets);
        assert_eq!(r.occupied_count(), 1);
        assert_eq!(r.values(100, 200), [10.0, 3.0, -1.0, 0.25]);
        let reversed = [dets[1].clone(), dets[0].clone()];
        assert_eq!(rasterize(&f, &reversed), r);
    }

    #[test]
    fn vertical_span_counts_and_clips() {
        let f = frame(vec![RadarPoint::new(10.0, 0.0, 0.0, 0.0, 1.0)]);
        let r = rasterize(&f, &[det(50.0, 300.0, 150.0, 0, single())]);
        assert_eq!(r.occupied_count(), 151);
        assert!(r.is_occupied(50, 300) && r.is_occupied(50, 150) && !r.is_occupied(50, 149));
        // Clipped at the top edge: rows 0..=100.
        let r = rasterize(&f, &[det(50.0, 100.0, 150.0, 0, single())]);
        assert_eq!(r.occupied_count(), 101);
    }

    #[test]
    fn rcs_weight_only_scales_r() {
        let f = frame(vec![RadarPoint::new(10.0, 0.0, 1.5, -0.5, 8.0)]);
        let cols = vec![
            ColumnWeight { offset: -1, weight: 0.5 },
            ColumnWeight { offset: 0, weight: 1.0 },
            ColumnWeight { offset: 1, weight: 0.5 },
        ];
        let r = rasterize(&f, &[det(10.0, 10.0, 0.0, 0, cols)]);
        assert_eq!(r.values(9, 10), [10.0, 4.0, 1.5, -0.5]);
        assert_eq!(r.values(10, 10), [10.0, 8.0, 1.5, -0.5]);
    }

    #[test]
    fn occupancy_is_authoritative_for_zero_values() {
        let f = frame(vec![RadarPoint::new(10.0, 0.0, 0.0, 0.0, 0.0)]);
        let r = rasterize(&f, &[det(3.0, 3.0, 0.0, 0, single())]);
        assert!(r.is_occupied(3, 3));
        assert_eq!(r.values(3, 3)[1], 0.0);
    }

    #[test]
    fn binary_round_trip_and_header() {
        let f = frame(vec![RadarPoint::new(10.0, 1.0, 0.3, 0.0, 4.0)]);
        let r = rasterize(&f, &[det(5.0, 8.0, 3.0, 0, single())]);
        let bytes = r.to_bytes();
        assert_eq!(&bytes[..4], b"RRAS");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 640);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 360);
        assert_eq!(bytes.len(), 16 + 640 * 360 * 17);
        assert_eq!(RadarRaster::from_bytes(&bytes).unwrap(), r);
        assert!(RadarRaster::from_bytes(&bytes[..100]).is_err());
    }

    #[test]
    fn normalize_endpoints() {
        let g = ImageGrid { width: 1, height: 1, data: vec![0.0, 255.0, 127.5] };
        assert_eq!(normalize_image(&g).unwrap().data, vec![-127.5, 127.5, 0.0]);
        let bad = ImageGrid { width: 1, height: 1, data: vec![0.0, 256.0, 1.0] };
        assert!(normalize_image(&bad).is_err());
    }

    #[test]
    fn resize_identity_and_halving() {
        let f = frame(vec![RadarPoint::new(12.0, 1.0, 0.0, 0.0, 1.0)]);
        assert_eq!(resize_frame(&f, 640, 360).unwrap(), f);

        let mut big = f.clone();
        big.calibration.fx = 1000.0;
        big.calibration.fy = 1000.0;
        big.calibration.cx = 640.0;
        big.calibration.cy = 360.0;
        big.calibration.image_width = 1280;
        big.calibration.image_height = 720;
        big.image = FrameImage::generated(RgbImage::from_pixel(1280, 720, Rgb([9, 9, 9])));
        big.boxes = vec![Box2D::new(100.0, 50.0, 300.0, 250.0, 1)];
        let small = resize_frame(&big, 640, 360).unwrap();
        assert_eq!(
            (small.calibration.fx, small.calibration.fy, small.calibration.cx, small.calibration.cy),
            (500.0, 500.0, 320.0, 180.0)
        );
        assert_eq!(small.boxes[0], Box2D::new(50.0, 25.0, 150.0, 125.0, 1));
        assert_eq!(small.image.pixels.get_pixel(10, 10).0, [9, 9, 9]);
    }

    #[test]
    fn png_export_writes_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let f = frame(vec![RadarPoint::new(10.0, 0.0, 0.0, 0.0, 4.0)]);
        let r = rasterize(&f, &[det(5.0, 8.0, 3.0, 0, single())]);
        let path = dir.path().join("d.png");
        let scale = export_channel_png(&r, Channel::D, &path).unwrap();
        assert_eq!((scale.min, scale.max), (0.0, 10.0));
        let back = image::open(&path).unwrap().to_luma16();
        assert_eq!(back.get_pixel(5, 8).0[0], 65535);
        assert!(path.with_extension("json").exists());
    }
}
