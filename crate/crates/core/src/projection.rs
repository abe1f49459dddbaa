//! Pinhole projection of radar points and pixel/metric conversions.
//!
//! Pixel coordinates put pixel centers on integers, so column `c` covers
//! `u ∈ [c − 0.5, c + 0.5)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{CameraCalibration, Frame, RadarPoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectedPoint {
    /// Sub-pixel column, not yet rounded.
    pub u: f64,
    /// Sub-pixel row, not yet rounded.
    pub v: f64,
    /// Camera-frame forward distance `Z`, meters.
    pub depth: f64,
    /// Index into the frame's radar points.
    pub source_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cull {
    BehindCamera,
    OutOfFrame,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projection {
    Visible(ProjectedPoint),
    Culled(Cull),
}

impl Projection {
    pub fn visible(self) -> Option<ProjectedPoint> {
        match self {
            Projection::Visible(p) => Some(p),
            Projection::Culled(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ProjectionConfig {
    /// Extra pixels around the image within which points are still kept.
    pub margin_px: f64,
}

impl ProjectionConfig {
    /// True when `(u, v)` rounds into the image grown by the margin.
    pub fn in_bounds(&self, u: f64, v: f64, cal: &CameraCalibration) -> bool {
        let m = self.margin_px;
        u >= -0.5 - m
            && u < f64::from(cal.image_width) - 0.5 + m
            && v >= -0.5 - m
            && v < f64::from(cal.image_height) - 0.5 + m
    }
}

pub fn project_point(
    p: &RadarPoint,
    source_index: usize,
    cal: &CameraCalibration,
    config: &ProjectionConfig,
) -> Projection {
    let c = cal.to_camera([p.x, p.y, p.z]);
    if !(c[2] > 0.0) {
        return Projection::Culled(Cull::BehindCamera);
    }
    let (u, v) = cal.project_camera(c);
    if !(u.is_finite() && v.is_finite()) || !config.in_bounds(u, v, cal) {
        return Projection::Culled(Cull::OutOfFrame);
    }
    Projection::Visible(ProjectedPoint {
        u,
        v,
        depth: c[2],
        source_index,
    })
}

/// Visible projections of all radar points of a frame, in point order.
pub fn project_frame(frame: &Frame, config: &ProjectionConfig) -> Vec<ProjectedPoint> {
    frame
        .radar_points
        .iter()
        .enumerate()
        .filter_map(|(i, p)| project_point(p, i, &frame.calibration, config).visible())
        .collect()
}

/// Pixel extent `fy·h/depth` of a metric height at the given depth.
pub fn meters_to_pixel_height(h: f64, depth: f64, cal: &CameraCalibration) -> Result<f64> {
    if !(depth > 0.0) {
        return Err(Error::Domain(format!("depth must be positive, got {depth}")));
    }
    if !(h >= 0.0) {
        return Err(Error::Domain(format!("height must be non-negative, got {h}")));
    }
    Ok(cal.fy * h / depth)
}

/// Azimuth of a pixel column relative to the optical axis.
pub fn pixel_column_angle(u: f64, cal: &CameraCalibration) -> f64 {
    ((u - cal.cx) / cal.fx).atan()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::tests::test_calibration;
    use proptest::prelude::*;

    fn identity_cal(fx: f64, cx: f64, cy: f64) -> CameraCalibration {
        let mut ext = [0.0; 16];
        for i in 0..4 {
            ext[i * 5] = 1.0;
        }
        CameraCalibration::new(fx, fx, cx, cy, ext, 640, 360).unwrap()
    }

    // With an identity extrinsic the radar point is already in camera axes.
    fn cam_point(x: f64, y: f64, z: f64) -> RadarPoint {
        RadarPoint { x, y, z, vx: 0.0, vy: 0.0, rcs: 0.0 }
    }

    #[test]
    fn optical_axis_hits_principal_point() {
        let cal = identity_cal(500.0, 320.0, 180.0);
        let p = project_point(&cam_point(0.0, 0.0, 10.0), 0, &cal, &Default::default())
            .visible()
            .unwrap();
        assert_eq!((p.u, p.v, p.depth), (320.0, 180.0, 10.0));
    }

    #[test]
    fn lateral_offset_by_hand() {
        let cal = identity_cal(500.0, 320.0, 180.0);
        let p = project_point(&cam_point(2.0, 0.0, 10.0), 0, &cal, &Default::default())
            .visible()
            .unwrap();
        assert_eq!(p.u, 420.0);
    }

    #[test]
    fn behind_camera_is_culled() {
        let cal = identity_cal(500.0, 320.0, 180.0);
        assert_eq!(
            project_point(&cam_point(0.0, 0.0, -5.0), 0, &cal, &Default::default()),
            Projection::Culled(Cull::BehindCamera)
        );
    }

    #[test]
    fn margin_controls_out_of_frame_culling() {
        let cal = identity_cal(500.0, 320.0, 180.0);
        // u = 320 + 500 * 6.45 / 10 = 642.5
        let p = cam_point(6.45, 0.0, 10.0);
        assert_eq!(
            project_point(&p, 0, &cal, &Default::default()),
            Projection::Culled(Cull::OutOfFrame)
        );
        let wide = ProjectionConfig { margin_px: 5.0 };
        assert!(project_point(&p, 0, &cal, &wide).visible().is_some());
    }

    #[test]
    fn pixel_height_by_hand() {
        let cal = test_calibration();
        assert_eq!(meters_to_pixel_height(0.0, 10.0, &cal).unwrap(), 0.0);
        assert_eq!(meters_to_pixel_height(1.5, 10.0, &cal).unwrap(), 75.0);
        assert!(meters_to_pixel_height(1.0, 0.0, &cal).is_err());
        assert!(meters_to_pixel_height(-1.0, 3.0, &cal).is_err());
    }

    #[test]
    fn column_angle_closed_forms() {
        let cal = test_calibration();
        assert_eq!(pixel_column_angle(cal.cx, &cal), 0.0);
        assert!((pixel_column_angle(cal.cx + cal.fx, &cal) - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        let sigma = 0.3f64.to_radians();
        let u = cal.cx + 500.0 * sigma.tan();
        assert!((pixel_column_angle(u, &cal) - sigma).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn column_angle_recovers_camera_azimuth(x in 2.0f64..150.0, y in -60.0f64..60.0) {
            let cal = test_calibration();
            let p = RadarPoint::new(x, y, 0.0, 0.0, 0.0);
            if let Some(pp) = project_point(&p, 0, &cal, &Default::default()).visible() {
                let c = cal.to_camera([x, y, 0.0]);
                let expected = (c[0] / c[2]).atan();
                prop_assert!((pixel_column_angle(pp.u, &cal) - expected).abs() < 1e-9);
            }
        }

        #[test]
        fn pixel_height_is_linear_and_inverse(h in 0.0f64..10.0, depth in 0.5f64..200.0) {
            let cal = test_calibration();
            let a = meters_to_pixel_height(h, depth, &cal).unwrap();
            let b = meters_to_pixel_height(2.0 * h, depth, &cal).unwrap();
            let c = meters_to_pixel_height(h, 2.0 * depth, &cal).unwrap();
            prop_assert!((b - 2.0 * a).abs() <= 1e-12 * a.max(1.0));
            prop_assert!((2.0 * c - a).abs() <= 1e-12 * a.max(1.0));
        }

        #[test]
        fn culling_matches_bounds(u in -50.0f64..700.0, v in -50.0f64..400.0) {
            let cal = identity_cal(500.0, 320.0, 180.0);
            let z = 10.0;
            let p = cam_point((u - 320.0) * z / 500.0, (v - 180.0) * z / 500.0, z);
            let visible = project_point(&p, 0, &cal, &Default::default()).visible().is_some();
            let pu = 320.0 + 500.0 * p.x / z;
            let pv = 180.0 + 500.0 * p.y / z;
            let inside = (-0.5..639.5).contains(&pu) && (-0.5..359.5).contains(&pv);
            prop_assert_eq!(visible, inside);
        }
    }
}
