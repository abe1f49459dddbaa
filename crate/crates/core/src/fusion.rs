//! Reference implementations of the two fusion blocks and the baselines.
//!
//! Self-weighted fusion (SWFB) reweights each modality by a trainable
//! spatial map and channel vector before adding:
//!
//! ```text
//! F(i,j,k) = F_img(i,j,k)·P_img^s(i,j)·P_img^c(k) + F_rad(i,j,k)·P_rad^s(i,j)·P_rad^c(k)
//! ```
//!
//! Segmentation-aided fusion (SAFB) scales the image features by a channel
//! attention weight, a spatial attention weight (both CBAM-style, times an
//! extra trainable map) and a cross-modal similarity map, then adds the
//! radar features:
//!
//! ```text
//! F'_img(i,j,k) = F_img(i,j,k)·W_sim(i,j)·W_s(i,j)·W_c(k)
//! F(i,j,k)      = F_rad(i,j,k) + F'_img(i,j,k)
//! ```

use crate::error::{Error, Result};
use crate::tensor::{
    concat_channels, conv2d, dense, ew, pool_channel, pool_spatial, sigmoid, ChannelVector, ConvKernel, Dense,
    EwOp, FeatureMap, PoolMode, SpatialMap,
};

fn require_same_shape(a: &FeatureMap, b: &FeatureMap) -> Result<()> {
    if a.shape() == b.shape() {
        Ok(())
    } else {
        Err(Error::ShapeMismatch(format!("{:?} vs {:?}", a.shape(), b.shape())))
    }
}

fn require_spatial(map: &SpatialMap, f: &FeatureMap, name: &str) -> Result<()> {
    if (map.width(), map.height()) == (f.width(), f.height()) {
        Ok(())
    } else {
        Err(Error::ShapeMismatch(format!(
            "{name} is {}x{}, features are {}x{}",
            map.width(),
            map.height(),
            f.width(),
            f.height()
        )))
    }
}

fn require_channels(v: &ChannelVector, f: &FeatureMap, name: &str) -> Result<()> {
    if v.len() == f.channels() {
        Ok(())
    } else {
        Err(Error::ShapeMismatch(format!(
            "{name} has {} entries, features have {} channels",
            v.len(),
            f.channels()
        )))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwfbParams {
    pub img_spatial: SpatialMap,
    pub img_channel: ChannelVector,
    pub rad_spatial: SpatialMap,
    pub rad_channel: ChannelVector,
}

impl SwfbParams {
    /// All four maps set to 1, which reduces the block to addition.
    pub fn identity(width: usize, height: usize, channels: usize) -> Result<Self> {
        Ok(Self {
            img_spatial: SpatialMap::filled(width, height, 1.0)?,
            img_channel: ChannelVector::filled(channels, 1.0)?,
            rad_spatial: SpatialMap::filled(width, height, 1.0)?,
            rad_channel: ChannelVector::filled(channels, 1.0)?,
        })
    }

    fn check(&self, f: &FeatureMap) -> Result<()> {
        require_spatial(&self.img_spatial, f, "img_spatial")?;
        require_spatial(&self.rad_spatial, f, "rad_spatial")?;
        require_channels(&self.img_channel, f, "img_channel")?;
        require_channels(&self.rad_channel, f, "rad_channel")
    }
}

pub fn swfb(f_img: &FeatureMap, f_rad: &FeatureMap, params: &SwfbParams) -> Result<FeatureMap> {
    require_same_shape(f_img, f_rad)?;
    params.check(f_img)?;
    let (w, h, c) = f_img.shape();
    FeatureMap::from_fn(w, h, c, |x, y, k| {
        f_img.get(x, y, k) * params.img_spatial.get(x, y) * params.img_channel.values()[k]
            + f_rad.get(x, y, k) * params.rad_spatial.get(x, y) * params.rad_channel.values()[k]
    })
}

/// Gradients of `Σ upstream ⊙ swfb(...)` with respect to the four weighting maps.
#[derive(Debug, Clone, PartialEq)]
pub struct SwfbGradients {
    pub img_spatial: SpatialMap,
    pub img_channel: ChannelVector,
    pub rad_spatial: SpatialMap,
    pub rad_channel: ChannelVector,
}

pub fn swfb_gradients(
    f_img: &FeatureMap,
    f_rad: &FeatureMap,
    params: &SwfbParams,
    upstream: &FeatureMap,
) -> Result<SwfbGradients> {
    require_same_shape(f_img, f_rad)?;
    require_same_shape(f_img, upstream)?;
    params.check(f_img)?;
    let (w, h, c) = f_img.shape();
    let branch = |f: &FeatureMap, s: &SpatialMap, ch: &ChannelVector| -> Result<(SpatialMap, ChannelVector)> {
        let grad_s = SpatialMap::from_fn(w, h, |x, y| {
            (0..c).map(|k| upstream.get(x, y, k) * f.get(x, y, k) * ch.values()[k]).sum()
        })?;
        let mut grad_c = vec![0.0; c];
        for y in 0..h {
            for x in 0..w {
                for (k, g) in grad_c.iter_mut().enumerate() {
                    *g += upstream.get(x, y, k) * f.get(x, y, k) * s.get(x, y);
                }
            }
        }
        Ok((grad_s, ChannelVector::new(grad_c)?))
    };
    let (img_spatial, img_channel) = branch(f_img, &params.img_spatial, &params.img_channel)?;
    let (rad_spatial, rad_channel) = branch(f_rad, &params.rad_spatial, &params.rad_channel)?;
    Ok(SwfbGradients { img_spatial, img_channel, rad_spatial, rad_channel })
}

/// Shared two-layer MLP of the channel attention: `C → ceil(C/ρ) → C`, ReLU between.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelAttention {
    pub hidden: Dense,
    pub output: Dense,
    pub extra: ChannelVector,
}

impl ChannelAttention {
    fn mlp(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut hidden = dense(v, &self.hidden)?;
        hidden.iter_mut().for_each(|h| *h = h.max(0.0));
        dense(&hidden, &self.output)
    }
}

/// `K×K×2×1` convolution over stacked (avg, max) channel pools.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialAttention {
    pub kernel: ConvKernel,
    pub extra: SpatialMap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SafbParams {
    pub channel: ChannelAttention,
    pub spatial: SpatialAttention,
}

impl SafbParams {
    pub const DEFAULT_REDUCTION: usize = 4;
    pub const DEFAULT_KERNEL: usize = 7;

    /// Zero MLP and convolution weights, extra maps filled with `extra`.
    pub fn zeroed(
        width: usize,
        height: usize,
        channels: usize,
        reduction: usize,
        kernel_size: usize,
        extra: f64,
    ) -> Result<Self> {
        if reduction == 0 {
            return Err(Error::Config("reduction ratio must be positive".into()));
        }
        let hidden = channels.div_ceil(reduction).max(1);
        Ok(Self {
            channel: ChannelAttention {
                hidden: Dense::zeros(channels, hidden)?,
                output: Dense::zeros(hidden, channels)?,
                extra: ChannelVector::filled(channels, extra)?,
            },
            spatial: SpatialAttention {
                kernel: ConvKernel::zeros(kernel_size, 2, 1)?,
                extra: SpatialMap::filled(width, height, extra)?,
            },
        })
    }

    pub fn check(&self, f: &FeatureMap) -> Result<()> {
        let c = f.channels();
        let ch = &self.channel;
        if ch.hidden.in_dim() != c || ch.output.out_dim() != c || ch.output.in_dim() != ch.hidden.out_dim() {
            return Err(Error::ShapeMismatch(format!("channel attention MLP does not fit {c} channels")));
        }
        require_channels(&ch.extra, f, "extra_channel")?;
        let k = &self.spatial.kernel;
        if k.in_channels() != 2 || k.out_channels() != 1 {
            return Err(Error::ShapeMismatch("spatial attention kernel must be K×K×2×1".into()));
        }
        require_spatial(&self.spatial.extra, f, "extra_spatial")
    }
}

fn channel_attention_raw(f_img: &FeatureMap, params: &SafbParams) -> Result<ChannelVector> {
    let ch = &params.channel;
    let avg = ch.mlp(pool_channel(f_img, PoolMode::Avg).values())?;
    let max = ch.mlp(pool_channel(f_img, PoolMode::Max).values())?;
    ChannelVector::new(avg.iter().zip(&max).map(|(a, m)| sigmoid(a + m)).collect())
}

fn spatial_attention_raw(f_img: &FeatureMap, params: &SafbParams) -> Result<SpatialMap> {
    let avg = pool_spatial(f_img, PoolMode::Avg);
    let max = pool_spatial(f_img, PoolMode::Max);
    let stacked = FeatureMap::from_planes(&[&avg, &max])?;
    let logits = conv2d(&stacked, &params.spatial.kernel)?;
    SpatialMap::new(f_img.width(), f_img.height(), logits.data().iter().map(|v| sigmoid(*v)).collect())
}

/// `W_c = sigmoid(mlp(avgpool) + mlp(maxpool)) ⊙ extra_channel`.
pub fn safb_channel_attention(f_img: &FeatureMap, params: &SafbParams) -> Result<ChannelVector> {
    params.check(f_img)?;
    channel_attention_raw(f_img, params)?.mul(&params.channel.extra)
}

/// `W_s = sigmoid(conv([avgpool; maxpool])) ⊙ extra_spatial`.
pub fn safb_spatial_attention(f_img: &FeatureMap, params: &SafbParams) -> Result<SpatialMap> {
    params.check(f_img)?;
    spatial_attention_raw(f_img, params)?.mul(&params.spatial.extra)
}

/// Per-pixel channel-axis cosine similarity mapped to `[0, 1]` by `(s + 1)/2`.
/// Pixels where either vector has norm below 1e-12 get the neutral 0.5.
pub fn similarity_weight(f_img: &FeatureMap, f_rad: &FeatureMap) -> Result<SpatialMap> {
    require_same_shape(f_img, f_rad)?;
    SpatialMap::from_fn(f_img.width(), f_img.height(), |x, y| {
        let (a, b) = (f_img.pixel(x, y), f_rad.pixel(x, y));
        let mut dot = 0.0;
        let mut na = 0.0;
        let mut nb = 0.0;
        for (p, q) in a.iter().zip(b) {
            dot += p * q;
            na += p * p;
            nb += q * q;
        }
        if na.sqrt() < 1e-12 || nb.sqrt() < 1e-12 {
            return 0.5;
        }
        let s = (dot / (na * nb).sqrt()).clamp(-1.0, 1.0);
        (s + 1.0) / 2.0
    })
}

/// Apply already computed SAFB weights: `F_rad + F_img·W_sim·W_s·W_c`.
pub fn safb_combine(
    f_img: &FeatureMap,
    f_rad: &FeatureMap,
    w_c: &ChannelVector,
    w_s: &SpatialMap,
    w_sim: &SpatialMap,
) -> Result<FeatureMap> {
    require_same_shape(f_img, f_rad)?;
    require_channels(w_c, f_img, "W_c")?;
    require_spatial(w_s, f_img, "W_s")?;
    require_spatial(w_sim, f_img, "W_sim")?;
    let (w, h, c) = f_img.shape();
    FeatureMap::from_fn(w, h, c, |x, y, k| {
        f_rad.get(x, y, k) + f_img.get(x, y, k) * w_sim.get(x, y) * w_s.get(x, y) * w_c.values()[k]
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SafbDiagnostics {
    pub w_c: ChannelVector,
    pub w_s: SpatialMap,
    pub w_sim: SpatialMap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionOutput {
    pub fused: FeatureMap,
    pub diagnostics: Option<SafbDiagnostics>,
}

pub fn safb(f_img: &FeatureMap, f_rad: &FeatureMap, params: &SafbParams) -> Result<FusionOutput> {
    require_same_shape(f_img, f_rad)?;
    let w_sim = similarity_weight(f_img, f_rad)?;
    let w_s = safb_spatial_attention(f_img, params)?;
    let w_c = safb_channel_attention(f_img, params)?;
    let fused = safb_combine(f_img, f_rad, &w_c, &w_s, &w_sim)?;
    Ok(FusionOutput {
        fused,
        diagnostics: Some(SafbDiagnostics { w_c, w_s, w_sim }),
    })
}

/// Gradients of `Σ upstream ⊙ safb(...)` with respect to the two extra maps.
#[derive(Debug, Clone, PartialEq)]
pub struct SafbExtraGradients {
    pub extra_channel: ChannelVector,
    pub extra_spatial: SpatialMap,
}

pub fn safb_extra_gradients(
    f_img: &FeatureMap,
    f_rad: &FeatureMap,
    params: &SafbParams,
    upstream: &FeatureMap,
) -> Result<SafbExtraGradients> {
    require_same_shape(f_img, f_rad)?;
    require_same_shape(f_img, upstream)?;
    params.check(f_img)?;
    let (w, h, c) = f_img.shape();
    let w_sim = similarity_weight(f_img, f_rad)?;
    let sig_c = channel_attention_raw(f_img, params)?;
    let sig_s = spatial_attention_raw(f_img, params)?;
    let w_c = sig_c.mul(&params.channel.extra)?;
    let w_s = sig_s.mul(&params.spatial.extra)?;

    let mut grad_c = vec![0.0; c];
    for y in 0..h {
        for x in 0..w {
            let scale = w_sim.get(x, y) * w_s.get(x, y);
            for (k, g) in grad_c.iter_mut().enumerate() {
                *g += upstream.get(x, y, k) * f_img.get(x, y, k) * scale;
            }
        }
    }
    grad_c.iter_mut().zip(sig_c.values()).for_each(|(g, s)| *g *= s);
    let extra_spatial = SpatialMap::from_fn(w, h, |x, y| {
        let inner: f64 = (0..c)
            .map(|k| upstream.get(x, y, k) * f_img.get(x, y, k) * w_c.values()[k])
            .sum();
        inner * w_sim.get(x, y) * sig_s.get(x, y)
    })?;
    Ok(SafbExtraGradients {
        extra_channel: ChannelVector::new(grad_c)?,
        extra_spatial,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineMode {
    Concat,
    Add,
    Mul,
}

pub fn baseline_fuse(mode: BaselineMode, f_img: &FeatureMap, f_rad: &FeatureMap) -> Result<FeatureMap> {
    require_same_shape(f_img, f_rad)?;
    match mode {
        BaselineMode::Concat => concat_channels(f_img, f_rad),
        BaselineMode::Add => ew(EwOp::Add, f_img, f_rad),
        BaselineMode::Mul => ew(EwOp::Mul, f_img, f_rad),
    }
}
