pub mod convert;
pub mod fuse;
pub mod metrics;
pub mod rasterize;
pub mod report;
pub mod synth;

use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use rfk_core::scene::{compute_stats, DatasetStats, SceneSet};
use rfk_core::pipeline::{HeightKind, Variant};

use crate::error::{CliError, CliResult};

pub(crate) fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Validation(e.to_string()))?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::Validation(format!("{}: {other:?}", path.display())),
    }
}

/// Dataset means for the adaptive estimate. A set without radar points can
/// still be processed when no variant needs them.
pub(crate) fn stats_for(scenes: &SceneSet, variants: &[Variant]) -> CliResult<Option<DatasetStats>> {
    match compute_stats(scenes) {
        Ok(s) => Ok(Some(s)),
        Err(rfk_core::Error::EmptyDataset) if variants.iter().all(|v| v.height == HeightKind::Fh) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

// Placeholder means when the fixed-height variant ignores them.
pub(crate) fn stats_or_unit(stats: Option<DatasetStats>) -> DatasetStats {
    stats.unwrap_or(DatasetStats { mean_distance: 1.0, mean_rcs: 1.0, point_count: 0 })
}
