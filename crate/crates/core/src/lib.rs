//! Radar-camera alignment toolkit.
//!
//! The crate covers the radar side of a radar-camera fusion detector:
//! projecting sparse radar detections into the camera image, extending them
//! vertically (fixed or adaptive height) and horizontally (uniform or
//! Gaussian azimuth extension), rasterizing them into a four-channel
//! `(d, r, vx, vy)` image, and measuring how well the result aligns with the
//! annotated objects. It also ships deterministic reference kernels for the
//! two fusion blocks, the detection losses and the free-space mask.
//!
//! Everything operates on plain values and is deterministic; there is no
//! global state.

pub mod error;
pub mod extension;
pub mod fusion;
pub mod losses;
pub mod metrics;
pub mod pipeline;
pub mod projection;
pub mod raster;
pub mod scene;
pub mod tensor;

pub use error::{Error, Result};
