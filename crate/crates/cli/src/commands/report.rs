use std::path::Path;

use rfk_core::metrics::{DistributionSummary, GroupSummary};

use super::csv_error;
use super::metrics::MetricsReport;
use crate::args::ReportArgs;
use crate::error::{CliError, CliResult};

/// One row of the long-format report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub variant: String,
    pub tag: String,
    pub metric: String,
    pub value: f64,
}

fn load_report(path: &Path) -> CliResult<MetricsReport> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn group_rows(variant: &str, tag: &str, g: &GroupSummary, rows: &mut Vec<ReportRow>) {
    let mut push = |metric: String, value: f64| {
        rows.push(ReportRow { variant: variant.to_string(), tag: tag.to_string(), metric, value });
    };
    push("frames".into(), g.frames as f64);
    push("mse_empty_frames".into(), g.empty_mse_frames as f64);
    push("height_error_empty_frames".into(), g.empty_height_frames as f64);
    let mut summary = |name: &str, s: &Option<DistributionSummary>| {
        if let Some(s) = s {
            for (stat, v) in [("mean", s.mean), ("q1", s.q1), ("median", s.median), ("q3", s.q3), ("count", s.count as f64)] {
                push(format!("{name}_{stat}"), v);
            }
        }
    };
    summary("mse", &g.mse);
    summary("height_error", &g.height_error);
}

/// Flatten the per-tag groups of every variant. Variants must be unique
/// across the inputs.
pub fn merge_reports(reports: &[MetricsReport]) -> CliResult<Vec<ReportRow>> {
    let mut seen: Vec<&str> = Vec::new();
    let mut rows = Vec::new();
    for r in reports {
        for v in &r.variants {
            if seen.contains(&v.variant.as_str()) {
                return Err(CliError::Validation(format!("variant {} appears in more than one report", v.variant)));
            }
            seen.push(&v.variant);
            for (tag, g) in &v.summary.by_tag {
                group_rows(&v.variant, tag.as_str(), g, &mut rows);
            }
        }
    }
    Ok(rows)
}

pub fn run(args: &ReportArgs) -> CliResult<String> {
    let reports = args.inputs.iter().map(|p| load_report(p)).collect::<CliResult<Vec<_>>>()?;
    let rows = merge_reports(&reports)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        super::create_dir(dir)?;
    }
    let path = args.out.as_path();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["variant", "tag", "metric", "value"]).map_err(|e| csv_error(path, e))?;
    for r in &rows {
        w.write_record([r.variant.as_str(), r.tag.as_str(), r.metric.as_str(), &r.value.to_string()])
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    Ok(format!("wrote {} rows to {}", rows.len(), args.out.display()))
}
