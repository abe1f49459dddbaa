use std::path::Path;

use serde::{Deserialize, Serialize};

use rfk_core::fusion::{
    baseline_fuse, safb, swfb, BaselineMode, ChannelAttention, SafbParams, SpatialAttention, SwfbParams,
};
use rfk_core::tensor::{ChannelVector, ConvKernel, Dense, FeatureMap, SpatialMap};

use super::{create_dir, write_bytes, write_json};
use crate::args::{Block, FuseCheckArgs};
use crate::error::{as_config, CliError, CliResult};

/// A map given either as one value for every entry or as the full array.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Fill {
    Scalar(f64),
    Values(Vec<f64>),
}

impl Fill {
    fn values(&self, len: usize, name: &str) -> CliResult<Vec<f64>> {
        match self {
            Fill::Scalar(v) => Ok(vec![*v; len]),
            Fill::Values(v) if v.len() == len => Ok(v.clone()),
            Fill::Values(v) => Err(CliError::Config(format!("{name} has {} values, expected {len}", v.len()))),
        }
    }
}

fn spatial(fill: Option<&Fill>, w: usize, h: usize, name: &str) -> CliResult<SpatialMap> {
    let data = fill.map_or(Ok(vec![1.0; w * h]), |f| f.values(w * h, name))?;
    SpatialMap::new(w, h, data).map_err(as_config)
}

fn channel(fill: Option<&Fill>, c: usize, name: &str) -> CliResult<ChannelVector> {
    let data = fill.map_or(Ok(vec![1.0; c]), |f| f.values(c, name))?;
    ChannelVector::new(data).map_err(as_config)
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwfbSpec {
    pub img_spatial: Option<Fill>,
    pub img_channel: Option<Fill>,
    pub rad_spatial: Option<Fill>,
    pub rad_channel: Option<Fill>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpSpec {
    pub hidden_weights: Vec<f64>,
    pub hidden_bias: Vec<f64>,
    pub output_weights: Vec<f64>,
    pub output_bias: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvSpec {
    pub weights: Vec<f64>,
    #[serde(default)]
    pub bias: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SafbSpec {
    pub reduction: Option<usize>,
    pub kernel_size: Option<usize>,
    pub mlp: Option<MlpSpec>,
    pub conv: Option<ConvSpec>,
    pub extra_channel: Option<Fill>,
    pub extra_spatial: Option<Fill>,
}

/// Parameter file of `fuse-check`. Missing parts default to identity
/// weighting maps and zero attention weights.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FuseParams {
    pub block: Option<Block>,
    #[serde(default)]
    pub swfb: SwfbSpec,
    #[serde(default)]
    pub safb: SafbSpec,
}

impl FuseParams {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn swfb_params(&self, w: usize, h: usize, c: usize) -> CliResult<SwfbParams> {
        let s = &self.swfb;
        Ok(SwfbParams {
            img_spatial: spatial(s.img_spatial.as_ref(), w, h, "swfb.img_spatial")?,
            img_channel: channel(s.img_channel.as_ref(), c, "swfb.img_channel")?,
            rad_spatial: spatial(s.rad_spatial.as_ref(), w, h, "swfb.rad_spatial")?,
            rad_channel: channel(s.rad_channel.as_ref(), c, "swfb.rad_channel")?,
        })
    }

    pub fn safb_params(&self, w: usize, h: usize, c: usize) -> CliResult<SafbParams> {
        let s = &self.safb;
        let reduction = s.reduction.unwrap_or(SafbParams::DEFAULT_REDUCTION);
        let k = s.kernel_size.unwrap_or(SafbParams::DEFAULT_KERNEL);
        let mut p = SafbParams::zeroed(w, h, c, reduction, k, 1.0).map_err(as_config)?;
        if let Some(m) = &s.mlp {
            let hidden = p.channel.hidden.out_dim();
            p.channel = ChannelAttention {
                hidden: Dense::new(c, hidden, m.hidden_weights.clone(), m.hidden_bias.clone()).map_err(as_config)?,
                output: Dense::new(hidden, c, m.output_weights.clone(), m.output_bias.clone()).map_err(as_config)?,
                extra: p.channel.extra,
            };
        }
        if let Some(conv) = &s.conv {
            p.spatial = SpatialAttention {
                kernel: ConvKernel::new(k, 2, 1, conv.weights.clone(), vec![conv.bias]).map_err(as_config)?,
                extra: p.spatial.extra,
            };
        }
        p.channel.extra = channel(s.extra_channel.as_ref(), c, "safb.extra_channel")?;
        p.spatial.extra = spatial(s.extra_spatial.as_ref(), w, h, "safb.extra_spatial")?;
        Ok(p)
    }
}

#[derive(Debug, Serialize)]
struct MapDump<'a> {
    width: usize,
    height: usize,
    data: &'a [f64],
}

#[derive(Debug, Serialize)]
struct Diagnostics<'a> {
    block: Block,
    shape: [usize; 3],
    #[serde(skip_serializing_if = "Option::is_none")]
    w_c: Option<&'a [f64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    w_s: Option<MapDump<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    w_sim: Option<MapDump<'a>>,
}

fn dump(m: &SpatialMap) -> MapDump<'_> {
    MapDump { width: m.width(), height: m.height(), data: m.data() }
}

pub fn run(args: &FuseCheckArgs) -> CliResult<String> {
    let params = match &args.params {
        Some(p) => FuseParams::load(p)?,
        None => FuseParams::default(),
    };
    let block = args.block.or(params.block).unwrap_or(Block::Safb);
    let f_img = FeatureMap::read(&args.img)?;
    let f_rad = FeatureMap::read(&args.rad)?;
    let (w, h, c) = f_img.shape();

    let (fused, diagnostics) = match block {
        Block::Swfb => (swfb(&f_img, &f_rad, &params.swfb_params(w, h, c)?)?, None),
        Block::Safb => {
            let out = safb(&f_img, &f_rad, &params.safb_params(w, h, c)?)?;
            (out.fused, out.diagnostics)
        }
        Block::Add => (baseline_fuse(BaselineMode::Add, &f_img, &f_rad)?, None),
        Block::Mul => (baseline_fuse(BaselineMode::Mul, &f_img, &f_rad)?, None),
        Block::Concat => (baseline_fuse(BaselineMode::Concat, &f_img, &f_rad)?, None),
    };

    create_dir(&args.out)?;
    write_bytes(&args.out.join("fused.fmap"), &fused.to_bytes())?;
    let (fw, fh, fc) = fused.shape();
    let diag = Diagnostics {
        block,
        shape: [fw, fh, fc],
        w_c: diagnostics.as_ref().map(|d| d.w_c.values()),
        w_s: diagnostics.as_ref().map(|d| dump(&d.w_s)),
        w_sim: diagnostics.as_ref().map(|d| dump(&d.w_sim)),
    };
    write_json(&args.out.join("diagnostics.json"), &diag)?;
    Ok(format!("fused {w}x{h}x{c} maps with {block:?} into {}", args.out.display()))
}
