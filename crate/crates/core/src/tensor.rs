//! Dense feature-map kernels used by the fusion blocks and losses.
//!
//! Layout is fixed: row-major over pixels with the channel index innermost,
//! so element `(x, y, k)` of a `W×H×C` map lives at `(y·W + x)·C + k`.
//! Every reduction sums in index order; nothing is reassociated.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub const FMAP_MAGIC: &[u8; 4] = b"FMAP";

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

fn check_finite(data: &[f64], what: &'static str) -> Result<()> {
    if data.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

impl FeatureMap {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || channels == 0 {
            return Err(Error::ShapeMismatch(format!(
                "feature map dimensions must be positive, got {width}x{height}x{channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {width}x{height}x{channels} map",
                data.len()
            )));
        }
        check_finite(&data, "feature map")?;
        Ok(Self { width, height, channels, data })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    pub fn zeros(width: usize, height: usize, channels: usize) -> Result<Self> {
        Self::filled(width, height, channels, 0.0)
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for k in 0..channels {
                    data.push(f(x, y, k));
                }
            }
        }
        Self::new(width, height, channels, data)
    }

    /// Stack spatial planes as channels.
    pub fn from_planes(planes: &[&SpatialMap]) -> Result<Self> {
        let first = planes
            .first()
            .ok_or_else(|| Error::ShapeMismatch("no planes to stack".into()))?;
        if planes.iter().any(|p| p.width != first.width || p.height != first.height) {
            return Err(Error::ShapeMismatch("planes differ in size".into()));
        }
        let c = planes.len();
        Self::from_fn(first.width, first.height, c, |x, y, k| planes[k].get(x, y))
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.channels)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn index(&self, x: usize, y: usize, k: usize) -> usize {
        (y * self.width + x) * self.channels + k
    }

    pub fn get(&self, x: usize, y: usize, k: usize) -> f64 {
        self.data[self.index(x, y, k)]
    }

    /// Channel vector at one pixel.
    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        let start = self.index(x, y, 0);
        &self.data[start..start + self.channels]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.width, self.height, self.channels, self.data.iter().map(|v| f(*v)).collect())
    }

    pub fn sigmoid(&self) -> Result<Self> {
        self.map(sigmoid)
    }

    /// Same shape with one element replaced.
    pub fn with_value(&self, x: usize, y: usize, k: usize, value: f64) -> Result<Self> {
        let mut data = self.data.clone();
        data[self.index(x, y, k)] = value;
        Self::new(self.width, self.height, self.channels, data)
    }

    fn require_same_shape(&self, other: &Self) -> Result<()> {
        if self.shape() == other.shape() {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "{:?} vs {:?}",
                self.shape(),
                other.shape()
            )))
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 8 * self.data.len());
        out.extend_from_slice(FMAP_MAGIC);
        for d in [self.width, self.height, self.channels] {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Parse { frame: None, message: format!("feature map: {m}") };
        if bytes.len() < 16 || &bytes[..4] != FMAP_MAGIC {
            return Err(bad("missing FMAP header"));
        }
        let word = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
        let (w, h, c) = (word(4), word(8), word(12));
        if bytes.len() != 16 + 8 * w * h * c {
            return Err(bad("length does not match dimensions"));
        }
        let data = bytes[16..]
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        Self::new(w, h, c, data)
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

/// One weight per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl SpatialMap {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {width}x{height} plane",
                data.len()
            )));
        }
        check_finite(&data, "spatial map")?;
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.width, self.height, self.data.iter().map(|v| f(*v)).collect())
    }

    pub fn sigmoid(&self) -> Result<Self> {
        self.map(sigmoid)
    }

    pub fn with_value(&self, x: usize, y: usize, value: f64) -> Result<Self> {
        let mut data = self.data.clone();
        data[y * self.width + x] = value;
        Self::new(self.width, self.height, data)
    }

    /// Elementwise product.
    pub fn mul(&self, other: &SpatialMap) -> Result<Self> {
        if (self.width, self.height) != (other.width, other.height) {
            return Err(Error::ShapeMismatch("spatial maps differ in size".into()));
        }
        Self::new(
            self.width,
            self.height,
            self.data.iter().zip(&other.data).map(|(a, b)| a * b).collect(),
        )
    }
}

/// One weight per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector(Vec<f64>);

impl ChannelVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::ShapeMismatch("empty channel vector".into()));
        }
        check_finite(&values, "channel vector")?;
        Ok(Self(values))
    }

    pub fn filled(len: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.0.iter().map(|v| f(*v)).collect())
    }

    pub fn sigmoid(&self) -> Result<Self> {
        self.map(sigmoid)
    }

    pub fn with_value(&self, k: usize, value: f64) -> Result<Self> {
        let mut v = self.0.clone();
        v[k] = value;
        Self::new(v)
    }

    pub fn mul(&self, other: &ChannelVector) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::ShapeMismatch("channel vectors differ in length".into()));
        }
        Self::new(self.0.iter().zip(&other.0).map(|(a, b)| a * b).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EwOp {
    Add,
    Sub,
    Mul,
}

pub fn ew(op: EwOp, a: &FeatureMap, b: &FeatureMap) -> Result<FeatureMap> {
    a.require_same_shape(b)?;
    let f = match op {
        EwOp::Add => |x: f64, y: f64| x + y,
        EwOp::Sub => |x: f64, y: f64| x - y,
        EwOp::Mul => |x: f64, y: f64| x * y,
    };
    FeatureMap::new(
        a.width,
        a.height,
        a.channels,
        a.data.iter().zip(&b.data).map(|(x, y)| f(*x, *y)).collect(),
    )
}

/// `out(x, y, k) = a(x, y, k) · s(x, y)`.
pub fn scale_spatial(a: &FeatureMap, s: &SpatialMap) -> Result<FeatureMap> {
    if (a.width, a.height) != (s.width, s.height) {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} plane for a {}x{} map",
            s.width, s.height, a.width, a.height
        )));
    }
    let c = a.channels;
    FeatureMap::new(
        a.width,
        a.height,
        c,
        a.data.iter().enumerate().map(|(i, v)| v * s.data[i / c]).collect(),
    )
}

/// `out(x, y, k) = a(x, y, k) · c(k)`.
pub fn scale_channel(a: &FeatureMap, c: &ChannelVector) -> Result<FeatureMap> {
    if a.channels != c.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} weights for {} channels",
            c.len(),
            a.channels
        )));
    }
    let n = a.channels;
    FeatureMap::new(
        a.width,
        a.height,
        n,
        a.data.iter().enumerate().map(|(i, v)| v * c.0[i % n]).collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolMode {
    Avg,
    Max,
}

/// Global pooling over all pixels, one value per channel.
pub fn pool_channel(a: &FeatureMap, mode: PoolMode) -> ChannelVector {
    let c = a.channels;
    let mut acc = match mode {
        PoolMode::Avg => vec![0.0; c],
        PoolMode::Max => vec![f64::NEG_INFINITY; c],
    };
    for px in a.data.chunks_exact(c) {
        for (slot, v) in acc.iter_mut().zip(px) {
            match mode {
                PoolMode::Avg => *slot += v,
                PoolMode::Max => *slot = slot.max(*v),
            }
        }
    }
    if mode == PoolMode::Avg {
        let n = (a.width * a.height) as f64;
        acc.iter_mut().for_each(|s| *s /= n);
    }
    ChannelVector(acc)
}

/// Pooling across channels at every pixel.
pub fn pool_spatial(a: &FeatureMap, mode: PoolMode) -> SpatialMap {
    let data = a
        .data
        .chunks_exact(a.channels)
        .map(|px| match mode {
            PoolMode::Avg => px.iter().sum::<f64>() / a.channels as f64,
            PoolMode::Max => px.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
        .collect();
    SpatialMap {
        width: a.width,
        height: a.height,
        data,
    }
}

/// `K×K×Cin×Cout` convolution weights plus one bias per output channel.
///
/// Weight `(ky, kx, ci, co)` is stored at `((ky·K + kx)·Cin + ci)·Cout + co`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvKernel {
    size: usize,
    in_channels: usize,
    out_channels: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl ConvKernel {
    pub fn new(size: usize, in_channels: usize, out_channels: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if size.is_multiple_of(2) {
            return Err(Error::ShapeMismatch(format!("kernel size must be odd, got {size}")));
        }
        if in_channels == 0 || out_channels == 0 {
            return Err(Error::ShapeMismatch("kernel channel counts must be positive".into()));
        }
        if weights.len() != size * size * in_channels * out_channels || bias.len() != out_channels {
            return Err(Error::ShapeMismatch("kernel weight or bias length".into()));
        }
        check_finite(&weights, "conv kernel")?;
        check_finite(&bias, "conv bias")?;
        Ok(Self { size, in_channels, out_channels, weights, bias })
    }

    pub fn zeros(size: usize, in_channels: usize, out_channels: usize) -> Result<Self> {
        Self::new(
            size,
            in_channels,
            out_channels,
            vec![0.0; size * size * in_channels * out_channels],
            vec![0.0; out_channels],
        )
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn out_channels(&self) -> usize {
        self.out_channels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn weight(&self, ky: usize, kx: usize, ci: usize, co: usize) -> f64 {
        self.weights[((ky * self.size + kx) * self.in_channels + ci) * self.out_channels + co]
    }
}

/// Zero-padded "same" convolution (cross-correlation, as in CNN layers).
///
/// Each output sums the bias first, then taps in `(ky, kx, ci)` order.
pub fn conv2d(a: &FeatureMap, kernel: &ConvKernel) -> Result<FeatureMap> {
    if a.channels != kernel.in_channels {
        return Err(Error::ShapeMismatch(format!(
            "kernel expects {} input channels, map has {}",
            kernel.in_channels, a.channels
        )));
    }
    let (w, h) = (a.width as isize, a.height as isize);
    let k = kernel.size as isize;
    let r = k / 2;
    let (cin, cout) = (kernel.in_channels, kernel.out_channels);
    let mut out = Vec::with_capacity(a.width * a.height * cout);
    let mut acc = vec![0.0; cout];
    for y in 0..h {
        for x in 0..w {
            acc.copy_from_slice(&kernel.bias);
            for ky in 0..k {
                let sy = y + ky - r;
                if sy < 0 || sy >= h {
                    continue;
                }
                for kx in 0..k {
                    let sx = x + kx - r;
                    if sx < 0 || sx >= w {
                        continue;
                    }
                    let input = a.pixel(sx as usize, sy as usize);
                    let tap = ((ky * k + kx) as usize) * cin * cout;
                    for (ci, v) in input.iter().enumerate() {
                        let row = &kernel.weights[tap + ci * cout..tap + (ci + 1) * cout];
                        for (slot, wgt) in acc.iter_mut().zip(row) {
                            *slot += wgt * v;
                        }
                    }
                }
            }
            out.extend_from_slice(&acc);
        }
    }
    FeatureMap::new(a.width, a.height, cout, out)
}

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Fully connected layer, `weights` is `out × in` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    in_dim: usize,
    out_dim: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl Dense {
    pub fn new(in_dim: usize, out_dim: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 || weights.len() != in_dim * out_dim || bias.len() != out_dim {
            return Err(Error::ShapeMismatch(format!(
                "dense {in_dim}->{out_dim} with {} weights and {} biases",
                weights.len(),
                bias.len()
            )));
        }
        check_finite(&weights, "dense weights")?;
        check_finite(&bias, "dense bias")?;
        Ok(Self { in_dim, out_dim, weights, bias })
    }

    pub fn zeros(in_dim: usize, out_dim: usize) -> Result<Self> {
        Self::new(in_dim, out_dim, vec![0.0; in_dim * out_dim], vec![0.0; out_dim])
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }
}

pub fn dense(v: &[f64], layer: &Dense) -> Result<Vec<f64>> {
    if v.len() != layer.in_dim {
        return Err(Error::ShapeMismatch(format!(
            "dense layer expects {} inputs, got {}",
            layer.in_dim,
            v.len()
        )));
    }
    Ok(layer
        .weights
        .chunks_exact(layer.in_dim)
        .zip(&layer.bias)
        .map(|(row, b)| row.iter().zip(v).fold(*b, |acc, (w, x)| acc + w * x))
        .collect())
}

/// Stack `b`'s channels after `a`'s.
pub fn concat_channels(a: &FeatureMap, b: &FeatureMap) -> Result<FeatureMap> {
    if (a.width, a.height) != (b.width, b.height) {
        return Err(Error::ShapeMismatch("concat operands differ in size".into()));
    }
    let mut data = Vec::with_capacity(a.data.len() + b.data.len());
    for (pa, pb) in a.data.chunks_exact(a.channels).zip(b.data.chunks_exact(b.channels)) {
        data.extend_from_slice(pa);
        data.extend_from_slice(pb);
    }
    FeatureMap::new(a.width, a.height, a.channels + b.channels, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp(w: usize, h: usize, c: usize) -> FeatureMap {
        FeatureMap::from_fn(w, h, c, |x, y, k| (x as f64) - 0.5 * (y as f64) + 0.25 * (k as f64) + 0.1).unwrap()
    }

    #[test]
    fn construction_rejects_non_finite_and_bad_shapes() {
        assert!(matches!(FeatureMap::new(1, 1, 1, vec![f64::NAN]), Err(Error::NonFinite(_))));
        assert!(FeatureMap::new(0, 1, 1, vec![]).is_err());
        assert!(FeatureMap::new(2, 1, 1, vec![1.0]).is_err());
        assert!(ChannelVector::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn elementwise_identities() {
        let a = ramp(3, 2, 4);
        let zeros = FeatureMap::zeros(3, 2, 4).unwrap();
        let ones = FeatureMap::filled(3, 2, 4, 1.0).unwrap();
        assert_eq!(ew(EwOp::Add, &a, &zeros).unwrap(), a);
        assert_eq!(ew(EwOp::Mul, &a, &ones).unwrap(), a);
        assert_eq!(ew(EwOp::Sub, &a, &a).unwrap(), zeros);
        let b = a.map(|v| v * 3.0 - 1.0).unwrap();
        assert_eq!(ew(EwOp::Add, &a, &b).unwrap(), ew(EwOp::Add, &b, &a).unwrap());
        assert!(ew(EwOp::Add, &a, &ramp(2, 3, 4)).is_err());
    }

    #[test]
    fn scaling_identities() {
        let a = ramp(3, 2, 4);
        let s = SpatialMap::from_fn(3, 2, |x, y| 1.0 + x as f64 * 0.5 - y as f64).unwrap();
        let c = ChannelVector::new(vec![0.5, 2.0, -1.0, 3.0]).unwrap();
        assert_eq!(scale_spatial(&a, &SpatialMap::filled(3, 2, 1.0).unwrap()).unwrap(), a);
        assert_eq!(
            scale_spatial(&a, &SpatialMap::filled(3, 2, 0.0).unwrap()).unwrap(),
            FeatureMap::zeros(3, 2, 4).unwrap()
        );
        assert_eq!(
            scale_channel(&scale_spatial(&a, &s).unwrap(), &c).unwrap(),
            scale_spatial(&scale_channel(&a, &c).unwrap(), &s).unwrap()
        );
        assert!(scale_channel(&a, &ChannelVector::filled(3, 1.0).unwrap()).is_err());
        assert!(scale_spatial(&a, &SpatialMap::filled(2, 3, 1.0).unwrap()).is_err());
    }

    #[test]
    fn pooling_closed_forms() {
        let c = FeatureMap::filled(4, 3, 2, 1.25).unwrap();
        assert_eq!(pool_channel(&c, PoolMode::Avg).values(), &[1.25, 1.25]);
        assert_eq!(pool_channel(&c, PoolMode::Max).values(), &[1.25, 1.25]);
        assert!(pool_spatial(&c, PoolMode::Avg).data().iter().all(|v| *v == 1.25));
        let two = FeatureMap::new(1, 1, 2, vec![1.0, 3.0]).unwrap();
        assert_eq!(pool_spatial(&two, PoolMode::Avg).get(0, 0), 2.0);
        assert_eq!(pool_spatial(&two, PoolMode::Max).get(0, 0), 3.0);
        let col = FeatureMap::new(2, 1, 1, vec![1.0, 3.0]).unwrap();
        assert_eq!(pool_channel(&col, PoolMode::Avg).values(), &[2.0]);
    }

    #[test]
    fn delta_kernel_is_identity() {
        let a = ramp(5, 4, 3);
        let mut w = vec![0.0; 3 * 3 * 3 * 3];
        for c in 0..3 {
            w[((3 + 1) * 3 + c) * 3 + c] = 1.0;
        }
        let k = ConvKernel::new(3, 3, 3, w, vec![0.0; 3]).unwrap();
        assert_eq!(conv2d(&a, &k).unwrap(), a);
        assert!(ConvKernel::zeros(4, 1, 1).is_err());
    }

    #[test]
    fn conv_center_of_3x3_is_hand_dot_product() {
        let a = FeatureMap::new(3, 3, 1, (1..=9).map(f64::from).collect()).unwrap();
        let w: Vec<f64> = (0..9).map(|i| 0.5 - 0.1 * f64::from(i)).collect();
        let k = ConvKernel::new(3, 1, 1, w.clone(), vec![0.25]).unwrap();
        let out = conv2d(&a, &k).unwrap();
        let hand = 0.25 + (1..=9).zip(&w).map(|(v, wt)| f64::from(v) * wt).sum::<f64>();
        assert!((out.get(1, 1, 0) - hand).abs() < 1e-12);
        // Corner sees only the 2x2 overlap.
        let corner = 0.25 + w[4] * 1.0 + w[5] * 2.0 + w[7] * 4.0 + w[8] * 5.0;
        assert!((out.get(0, 0, 0) - corner).abs() < 1e-12);
    }

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(-800.0).is_finite());
        assert!(sigmoid(40.0) <= 1.0);
    }

    #[test]
    fn dense_and_concat() {
        let layer = Dense::new(2, 3, vec![1.0, 0.0, 0.0, 1.0, 1.0, 1.0], vec![0.0, 1.0, -1.0]).unwrap();
        assert_eq!(dense(&[2.0, 3.0], &layer).unwrap(), vec![2.0, 4.0, 4.0]);
        assert!(dense(&[1.0], &layer).is_err());
        let a = ramp(2, 2, 1);
        let b = ramp(2, 2, 2);
        let c = concat_channels(&a, &b).unwrap();
        assert_eq!(c.shape(), (2, 2, 3));
        assert_eq!(c.pixel(1, 1), &[a.get(1, 1, 0), b.get(1, 1, 0), b.get(1, 1, 1)]);
    }

    #[test]
    fn fmap_bytes_round_trip() {
        let a = ramp(3, 2, 2);
        let bytes = a.to_bytes();
        assert_eq!(&bytes[..4], b"FMAP");
        assert_eq!(FeatureMap::from_bytes(&bytes).unwrap(), a);
        assert!(FeatureMap::from_bytes(&bytes[..20]).is_err());
    }

    proptest! {
        #[test]
        fn max_pool_dominates_avg(vals in proptest::collection::vec(-10.0f64..10.0, 12)) {
            let a = FeatureMap::new(2, 2, 3, vals).unwrap();
            let (ca, cm) = (pool_channel(&a, PoolMode::Avg), pool_channel(&a, PoolMode::Max));
            for (x, y) in ca.values().iter().zip(cm.values()) {
                prop_assert!(y >= x);
            }
            let (sa, sm) = (pool_spatial(&a, PoolMode::Avg), pool_spatial(&a, PoolMode::Max));
            for (x, y) in sa.data().iter().zip(sm.data()) {
                prop_assert!(y >= x);
            }
        }

        #[test]
        fn sigmoid_monotone_bounded(a in -30.0f64..30.0, d in 0.001f64..5.0) {
            let (s, t) = (sigmoid(a), sigmoid(a + d));
            prop_assert!(s > 0.0 && s < 1.0);
            prop_assert!(t > s);
        }
    }
}
